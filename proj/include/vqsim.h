/* C interface to the video-delivery scenario simulator.
 *
 * All entry points are synchronous and single-threaded per handle. Errors
 * are reported as status codes; vqs_last_error() returns a thread-local
 * message describing the most recent failure on the calling thread.
 */

#ifndef VQSIM_H
#define VQSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VQS_API __declspec(dllexport)
#else
#define VQS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vqs_status {
    VQS_OK = 0,
    VQS_EINVAL = 1,    /* null handle or bad argument */
    VQS_EPARSE = 2,    /* config did not parse or validate; key named in message */
    VQS_EIO = 3,       /* file could not be read or written */
    VQS_ECONTRACT = 4, /* internal invariant tripped; results unusable */
    VQS_ERANGE = 5,    /* output buffer too small */
} vqs_status;

/* Opaque scenario configuration. Create, mutate by string key, run. */
typedef struct vqs_config vqs_config;

/* Headline results of one run. invariants_ok is 1 when every internal
 * consistency check held: packet conservation, queue bounds, FIFO order,
 * work conservation, admission safety, and the metric cross-checks. */
typedef struct vqs_summary {
    char architecture[16];
    int64_t seed;
    double mean_mos;
    int successful_sessions;
    double mean_delay_ns;
    double mean_jitter_ns;
    double drop_ratio;
    double utilization;           /* decodable video goodput share */
    double utilization_video_raw; /* delivered video wire-bit share */
    double utilization_total;     /* all bottleneck wire bits */
    int requested;
    int admitted;
    int rejected;
    uint64_t events_processed;
    int invariants_ok;
} vqs_summary;

VQS_API const char* vqs_version(void);
VQS_API const char* vqs_status_name(vqs_status s);

/* Message for the last failing call on this thread; never NULL. */
VQS_API const char* vqs_last_error(void);

/* Fresh config with the built-in defaults (the reference comparison
 * scenario). Free with vqs_config_free. */
VQS_API vqs_config* vqs_config_create(void);

/* Parse and validate a config file. NULL on failure (see vqs_last_error). */
VQS_API vqs_config* vqs_config_load(const char* path);

VQS_API void vqs_config_free(vqs_config* cfg);

/* Keys are the flat dotted names used by the config file format, e.g.
 * "architecture", "sim.seed", "network.capacity_bps". Unknown keys and
 * malformed values fail with VQS_EPARSE. */
VQS_API vqs_status vqs_config_set(vqs_config* cfg, const char* key, const char* value);

/* Canonical string form of one value. Needs strlen+1 bytes of buffer;
 * VQS_ERANGE reports the required size in the error message. */
VQS_API vqs_status vqs_config_get(const vqs_config* cfg, const char* key, char* buf,
                                  size_t buf_len);

/* Write the canonical form of the whole config. */
VQS_API vqs_status vqs_config_save(const vqs_config* cfg, const char* path);

VQS_API vqs_status vqs_config_validate(const vqs_config* cfg);

/* One run. seed < 0 keeps the config's sim.seed. out_dir may be NULL or
 * empty to skip file output; otherwise sessions.csv, summary.csv, the CDF
 * files, admission.csv, adaptation.csv and meta.txt are written there,
 * plus packets.csv when packet_log is nonzero. summary may be NULL. */
VQS_API vqs_status vqs_run(const vqs_config* cfg, int64_t seed, const char* out_dir,
                           int packet_log, vqs_summary* summary);

/* Runs all three architectures over the given seeds with identical
 * arrival schedules per seed. summaries, when non-NULL, receives
 * 3 * n_seeds entries in architecture-major order (non_adaptive,
 * adaptive, cross). table_buf, when non-NULL, receives the human-readable
 * comparison table. Per-run outputs and comparison.csv go under out_dir
 * unless it is NULL or empty. */
VQS_API vqs_status vqs_compare(const vqs_config* cfg, const int64_t* seeds, size_t n_seeds,
                               const char* out_dir, int packet_log, vqs_summary* summaries,
                               char* table_buf, size_t table_len);

/* Frame schedule of the synthetic content at quantizer q (2..31) as CSV:
 * index,type,size_bytes,display_time_ns. seed < 0 keeps sim.seed; the
 * noise stream is the one session 0 of that run would use. */
VQS_API vqs_status vqs_trace_csv(const vqs_config* cfg, int q, int64_t seed,
                                 const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VQSIM_H */
