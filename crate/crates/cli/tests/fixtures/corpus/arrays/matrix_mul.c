#include <stdio.h>

int main(void) {
  int n;
  double a[8][8], b[8][8], c[8][8];
  if (scanf("%d", &n) != 1 || n < 1 || n > 8) return 1;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) scanf("%lf", &a[i][j]);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) scanf("%lf", &b[i][j]);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) {
      c[i][j] = 0;
      for (int k = 0; k < n; k++) c[i][j] += a[i][k] * b[k][j];
    }
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < n; j++) printf("%.2f ", c[i][j]);
    printf("\n");
  }
  return 0;
}
