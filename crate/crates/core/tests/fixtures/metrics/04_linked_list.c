#include <stdio.h>
#include <stdlib.h>

struct node {
    int value;
    struct node *next;
};

static struct node *push(struct node *head, int v) {
    struct node *n = malloc(sizeof(struct node));
    n->value = v;
    n->next = head;
    return n;
}

int main(void) {
    struct node *list = NULL;
    for (int i = 0; i < 3; i++)
        list = push(list, i);
    int total = 0;
    while (list) {
        struct node *next = list->next;
        total += list->value;
        free(list);
        list = next;
    }
    printf("%d\n", total);
    return 0;
}
