#ifndef PMT_H
#define PMT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    PMT_OK = 0,
    PMT_UNKNOWN_BACKEND = 1,
    PMT_DEVICE_UNAVAILABLE = 2,
    PMT_INVALID_CONFIG = 3,
    PMT_INTERVAL_TOO_SMALL = 4,
    PMT_SENSOR_STOPPED = 5,
    PMT_BACKEND_READ_FAILED = 6,
    PMT_NEGATIVE_INTERVAL = 7,
    PMT_DEGENERATE_MEASUREMENT = 8,
    PMT_DUMP_ALREADY_ACTIVE = 9,
    PMT_DUMP_NOT_ACTIVE = 10,
    PMT_IO = 11,
    PMT_PARSE = 12,
    PMT_NULL_POINTER = 13,
    PMT_INVALID_UTF8 = 14,
    PMT_PANIC = 15
} pmt_status;

typedef struct PmtSensor pmt_sensor;
typedef struct PmtState pmt_state;

typedef struct {
    double joules;
    double watts;
    double seconds;
} pmt_measurement;

/* config: NULL or "key=value;key=value", e.g. "interval_ms=10;power_watts=30" */
pmt_status pmt_create(const char *backend, uint32_t device, const char *config, pmt_sensor **out);
void pmt_destroy(pmt_sensor *sensor);

pmt_status pmt_read(const pmt_sensor *sensor, pmt_state **out);
void pmt_state_free(pmt_state *state);
pmt_status pmt_state_timestamp(const pmt_state *state, double *out);
pmt_status pmt_state_joules(const pmt_state *state, double *out);

pmt_status pmt_joules(const pmt_state *start, const pmt_state *end, double *out);
pmt_status pmt_watts(const pmt_state *start, const pmt_state *end, double *out);
pmt_status pmt_seconds(const pmt_state *start, const pmt_state *end, double *out);
pmt_status pmt_measurement_between(const pmt_state *start, const pmt_state *end, pmt_measurement *out);

pmt_status pmt_energy_delay_product(const pmt_measurement *m, double *out);
pmt_status pmt_flops_efficiency(const pmt_measurement *m, uint64_t flop_count, double *out);

pmt_status pmt_start_dump(const pmt_sensor *sensor, const char *path);
pmt_status pmt_stop_dump(const pmt_sensor *sensor);
pmt_status pmt_stop(pmt_sensor *sensor);

/* Returns the full message length; writes at most len-1 bytes plus NUL. */
size_t pmt_last_error(char *buf, size_t len);

#ifdef __cplusplus
}
#endif

#endif
