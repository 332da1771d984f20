struct timer {
    long expires;
    int armed;
};

void timer_arm(struct timer *t, long when)
{
    t->expires = when;
    t->armed = 1;
}

#if defined(CONFIG_TIMER_SLACK)
long timer_slack(struct timer *t, long slack)
{
    struct timer copy = *t;
    copy.expires -= slack;
    if (copy.expires < 0) {
        copy.expires = 0;
    }
    return copy.expires;
}
#elif defined(CONFIG_TIMER_EXACT)
long timer_slack(struct timer *t, long slack)
{
    (void)slack;
    return t->expires;
}
#endif
