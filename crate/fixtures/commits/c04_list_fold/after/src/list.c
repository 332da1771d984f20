#include <stddef.h>

struct node {
    int value;
    struct node *next;
};

#if defined(LIST_SUM) || defined(LIST_COUNT)
static int fold(const struct node *n, int count_only)
{
    int acc = 0;
    while (n != NULL) {
        acc += count_only ? 1 : n->value;
        n = n->next;
    }
    return acc;
}
#endif

#ifdef LIST_SUM
int list_sum(const struct node *head)
{
    return fold(head, 0);
}
#endif

#ifdef LIST_COUNT
int list_count(const struct node *head)
{
    return fold(head, 1);
}
#endif
