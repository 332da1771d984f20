#include <string.h>

struct session {
    int uid;
    int gid;
};

int session_valid(const struct session *s)
{
    return s->uid >= 0;
}

#ifdef ENABLE_PAM
struct info {
    const char *name;
    const char *pw;
#ifdef ENABLE_AUTH_MD5
    unsigned char digest[16];
#endif
};

static struct info userinfo;

int info_set(const char *name, const char *pw)
{
    userinfo.name = name;
    userinfo.pw = pw;
    if (strlen(name) == 0) {
        return -1;
    }
    return 0;
}
#endif
