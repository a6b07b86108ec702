#include <stdio.h>

int main(void) {
  int n;
  if (scanf("%d", &n) != 1) return 1;
  for (int i = 1; i <= n; i++) {
    switch ((i % 3 == 0) + 2 * (i % 5 == 0)) {
    case 1: puts("Fizz"); break;
    case 2: puts("Buzz"); break;
    case 3: puts("FizzBuzz"); break;
    default: printf("%d\n", i);
    }
  }
  return 0;
}
