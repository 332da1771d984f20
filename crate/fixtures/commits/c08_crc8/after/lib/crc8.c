#include <stdint.h>

#ifdef CRC8_TABLE
static const uint8_t crc8_table[4] = { 0x00, 0x07, 0x0e, 0x09 };
#endif

uint8_t crc8(const uint8_t *buf, unsigned len)
{
    uint8_t crc = 0;
    unsigned i;
    for (i = 0; i < len; i++) {
#ifdef CRC8_TABLE
        crc = crc8_table[(crc ^ buf[i]) & 0x03];
#else
        crc ^= buf[i];
#endif
    }
    return crc;
}
