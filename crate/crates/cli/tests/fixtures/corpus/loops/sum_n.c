#include <stdio.h>

int main(void) {
  long n, total = 0;
  if (scanf("%ld", &n) != 1) return 1;
  for (long i = 1; i <= n; i++)
    total += i;
  printf("%ld\n", total);
  return 0;
}
