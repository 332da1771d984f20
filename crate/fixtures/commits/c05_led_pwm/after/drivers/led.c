struct led {
    int pin;
    int level;
#ifdef CONFIG_LED_PWM
    int duty;
#endif
};

static struct led status_led = { 13, 0 };

void led_set(int on)
{
    status_led.level = on;
}

#ifdef CONFIG_LED_PWM
void led_dim(int percent)
{
    if (percent > 100) {
        percent = 100;
    } else if (percent < 0) {
        percent = 0;
    }
    status_led.duty = percent * 255 / 100;
    status_led.level = status_led.duty > 0;
}
#endif
