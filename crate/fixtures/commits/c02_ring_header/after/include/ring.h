#ifndef RING_H
#define RING_H

#define RING_SIZE 64

struct ring {
    unsigned head;
    unsigned tail;
#ifdef CONFIG_RING_STATS
    unsigned long drops;
#endif
    char data[RING_SIZE];
};

static inline int ring_empty(const struct ring *r)
{
    return r->head == r->tail;
}

#endif
