struct led {
    int pin;
    int level;
};

static struct led status_led = { 13, 0 };

void led_set(int on)
{
    status_led.level = on;
}
