#include <stdio.h>

#ifndef LOG_QUIET
#define LOG_PREFIX "app: "
#endif

void log_msg(const char *msg)
{
#ifdef LOG_QUIET
    (void)msg;
#else
    fprintf(stderr, LOG_PREFIX "%s\n", msg);
#endif
}

#ifdef LOG_TIMESTAMPS
void log_stamp(long secs, const char *msg)
{
    const char *tag = "[t]";
    fprintf(stderr, "%s %ld %s\n", tag, secs, msg);
}
#endif
