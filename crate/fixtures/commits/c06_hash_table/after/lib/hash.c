#include <string.h>

#ifndef HASH_BUCKETS
#define HASH_BUCKETS 32
#endif

struct entry {
    const char *key;
    int value;
};

static struct entry table[HASH_BUCKETS];

static unsigned hash(const char *s)
{
    unsigned h = 5381;
    while (*s) {
        h = h * 33 + (unsigned char)*s++;
    }
    return h % HASH_BUCKETS;
}

int hash_put(const char *key, int value)
{
    unsigned i = hash(key);
#ifdef HASH_STRICT
    if (table[i].key != NULL && strcmp(table[i].key, key) != 0) {
        return -1;
    }
#endif
    table[i].key = key;
    table[i].value = value;
    return 0;
}
