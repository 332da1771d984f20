#ifndef SENSOR_H
#define SENSOR_H

struct sensor {
    int id;
    unsigned flags;
};

#endif
