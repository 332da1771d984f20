#include <stdio.h>
#include <string.h>

enum mode { MODE_OFF, MODE_ON, MODE_AUTO };

static int verbose;
#ifdef CONFIG_DEBUG
static int debug_level;
#endif

int parse_flag(const char *arg)
{
    if (strcmp(arg, "-v") == 0) {
        verbose = 1;
        return MODE_ON;
    } else if (strcmp(arg, "-a") == 0) {
        return MODE_AUTO;
    }
#ifdef CONFIG_DEBUG
    if (strcmp(arg, "-d") == 0) {
        debug_level += 2;
        printf("debug level %d\n", debug_level);
        return MODE_ON;
    }
#endif
    return MODE_OFF;
}
