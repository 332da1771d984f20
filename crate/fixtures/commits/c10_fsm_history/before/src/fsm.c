enum state { IDLE, RUNNING };

static enum state current = IDLE;

int fsm_step(int input)
{
    switch (current) {
    case IDLE:
        if (input) {
            current = RUNNING;
        }
        break;
    case RUNNING:
        break;
    }
    return current;
}
