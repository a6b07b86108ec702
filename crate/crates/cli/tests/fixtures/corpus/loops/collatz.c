#include <stdio.h>

static int steps(unsigned long x) {
  int s = 0;
  while (x != 1) {
    x = (x % 2) ? 3 * x + 1 : x / 2;
    s++;
  }
  return s;
}

int main(void) {
  unsigned long x;
  while (scanf("%lu", &x) == 1)
    printf("%lu %d\n", x, steps(x));
  return 0;
}
