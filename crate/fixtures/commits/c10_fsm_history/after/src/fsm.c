enum state { IDLE, RUNNING };

static enum state current = IDLE;
#ifdef FSM_HISTORY
static enum state previous = IDLE;
#endif

int fsm_step(int input)
{
#ifdef FSM_HISTORY
    previous = current;
#endif
    switch (current) {
    case IDLE:
        if (input == 1) {
            current = RUNNING;
        }
        break;
    case RUNNING:
        if (input == 0) {
            current = IDLE;
        }
        break;
    }
    return current;
}

#ifdef FSM_HISTORY
int fsm_changed(void)
{
    return previous != current;
}
#endif
