#include <stdio.h>

int is_leap(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int main(void) {
  int y;
  while (scanf("%d", &y) == 1)
    printf("%d %s\n", y, is_leap(y) ? "leap" : "common");
  return 0;
}
