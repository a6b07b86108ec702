#include <stdio.h>

typedef int (*binop)(int, int);

static int add(int a, int b) { return a + b; }
static int mul(int a, int b) { return a * b; }

int apply(int (*op)(int, int), int x, int y) {
    return op(x, y);
}

int main(void) {
    binop table[2] = {add, mul};
    int (*chosen)(int, int) = table[1];
    int r = apply(chosen, 3, 4) + (*chosen)(1, 2);
    if (r > 10 && table[0](1, 1) == 2)
        printf("big %d\n", r);
    else if (r > 5)
        printf("mid\n");
    else
        printf("small\n");
    return 0;
}
