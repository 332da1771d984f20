#include <stdio.h>
#include <string.h>

enum mode { MODE_OFF, MODE_ON };

static int verbose;

int parse_flag(const char *arg)
{
    if (strcmp(arg, "-v") == 0) {
        verbose = 1;
        return MODE_ON;
    }
    return MODE_OFF;
}
