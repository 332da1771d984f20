#include <stddef.h>

struct queue {
    int items[16];
    int head;
    int count;
#ifdef QUEUE_WATERMARK
    int high;
#endif
};

void queue_init(struct queue *q)
{
    q->head = 0;
    q->count = 0;
#ifdef QUEUE_WATERMARK
    q->high = 0;
#endif
}

int queue_full(const struct queue *q)
{
    return q->count == 16;
}

int queue_len(const struct queue *q)
{
    return q->count;
}

int queue_push(struct queue *q, int v)
{
    if (queue_full(q)) {
        return -1;
    }
    q->items[(q->head + q->count) % 16] = v;
    q->count += 1;
#ifdef QUEUE_WATERMARK
    if (q->count > q->high) {
        q->high = q->count;
    }
#endif
    return 0;
}
