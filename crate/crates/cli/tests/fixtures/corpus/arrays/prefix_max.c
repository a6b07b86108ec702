#include <stdio.h>

#define N 64

int data[N];
const int limit = N;

int main(void) {
  int n = 0, best;
  while (n < limit && scanf("%d", &data[n]) == 1) n++;
  if (n == 0) return 0;
  best = data[0];
  for (int i = 0; i < n; i++) {
    if (data[i] > best) best = data[i];
    printf("%d\n", best);
  }
  return 0;
}
