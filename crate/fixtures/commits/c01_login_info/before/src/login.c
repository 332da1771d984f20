#include <string.h>

struct session {
    int uid;
    int gid;
};

int session_valid(const struct session *s)
{
    return s->uid >= 0;
}
