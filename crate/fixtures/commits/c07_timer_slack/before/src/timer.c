struct timer {
    long expires;
    int armed;
};

void timer_arm(struct timer *t, long when)
{
    t->expires = when;
    t->armed = 1;
}
