#include <stdio.h>

int main(void) {
  int a, b, c;
  if (scanf("%d %d %d", &a, &b, &c) != 3) return 1;
  if (a + b <= c || a + c <= b || b + c <= a)
    puts("invalid");
  else if (a == b && b == c)
    puts("equilateral");
  else if (a == b || b == c || a == c)
    puts("isosceles");
  else
    puts("scalene");
  return 0;
}
