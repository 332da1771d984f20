#ifndef SENSOR_H
#define SENSOR_H

struct sensor {
    int id;
    unsigned flags;
#ifdef SENSOR_CALIB
    union {
        int offset;
        float scale;
    } calib;
#ifdef SENSOR_CALIB_EXT
    unsigned valid : 1;
    unsigned source : 3;
#endif
#endif
};

static inline int sensor_id(const struct sensor *s)
{
    return s->id;
}

#endif
