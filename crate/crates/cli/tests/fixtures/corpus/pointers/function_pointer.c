#include <stdio.h>

static int add(int a, int b) { return a + b; }
static int sub(int a, int b) { return a - b; }
static int mul(int a, int b) { return a * b; }

int main(void) {
  int (*ops[3])(int, int) = {add, sub, mul};
  char op;
  int a, b;
  while (scanf(" %c %d %d", &op, &a, &b) == 3) {
    int i = op == '+' ? 0 : op == '-' ? 1 : 2;
    printf("%d\n", ops[i](a, b));
  }
  return 0;
}
