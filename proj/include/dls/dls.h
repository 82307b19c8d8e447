/* Two-level dynamic loop self-scheduling: C interface.
 *
 * All functions returning dls_status report failures through the status
 * code; dls_last_error() then holds a message for the calling thread.
 * Handles are opaque and must be released with the matching _destroy call.
 * A handle may be moved between threads but not used from two at once,
 * except where noted.
 */
#ifndef DLS_DLS_H
#define DLS_DLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DLS_API __declspec(dllexport)
#else
#define DLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define DLS_VERSION_MAJOR 1
#define DLS_VERSION_MINOR 0

typedef enum dls_status {
  DLS_OK = 0,
  DLS_E_INVALID_ARGUMENT = 1,
  DLS_E_MISSING_PARAMETER = 2,
  DLS_E_PROTOCOL_VIOLATION = 3,
  DLS_E_SETUP = 4,
  DLS_E_UNDEFINED_METRIC = 5,
  DLS_E_TRACE = 6,
  DLS_E_IO = 7,
  DLS_E_RUNTIME = 8,
  DLS_E_NO_MEMORY = 9,
  DLS_E_INTERNAL = 10
} dls_status;

DLS_API const char* dls_version(void);
DLS_API const char* dls_status_name(dls_status status);
/* Message of the last failed call on this thread; "" if none. */
DLS_API const char* dls_last_error(void);

/* ---- techniques ------------------------------------------------------- */

typedef enum dls_technique {
  DLS_STATIC = 0,
  DLS_SS,
  DLS_FSC,
  DLS_MFSC,
  DLS_GSS,
  DLS_TSS,
  DLS_FAC,
  DLS_WF,
  DLS_RAND,
  DLS_AWF,
  DLS_AWF_B,
  DLS_AWF_C,
  DLS_AWF_D,
  DLS_AWF_E,
  DLS_AF,
  DLS_NODLB
} dls_technique;

/* Case-insensitive; '_' and '-' are interchangeable. */
DLS_API dls_status dls_technique_parse(const char* name, dls_technique* out);
DLS_API const char* dls_technique_name(dls_technique t);
/* Comma-separated list of accepted names. */
DLS_API const char* dls_technique_valid_names(void);
DLS_API int dls_technique_is_adaptive(dls_technique t);
DLS_API int dls_technique_is_awf_family(dls_technique t);

/* ---- scheduler -------------------------------------------------------- */

typedef struct dls_scheduler dls_scheduler;

typedef struct dls_chunk {
  uint32_t pe;
  uint64_t start;
  uint64_t size;
  uint64_t batch_id;
  uint64_t round;
} dls_chunk;

typedef struct dls_scheduler_options {
  uint64_t min_chunk; /* 0 means 1 */
  uint64_t seed;
  int has_fsc;
  double fsc_overhead_s;
  double fsc_sigma_s;
  const double* weights; /* NULL: all ones */
  size_t weight_count;
} dls_scheduler_options;

DLS_API void dls_scheduler_options_init(dls_scheduler_options* opts);
DLS_API dls_status dls_scheduler_create(dls_technique t, uint64_t n, uint32_t pes,
                                        const dls_scheduler_options* opts, dls_scheduler** out);
DLS_API void dls_scheduler_destroy(dls_scheduler* s);
/* *exhausted is set to 1 (and *out untouched) when the PE gets no chunk. */
DLS_API dls_status dls_scheduler_next(dls_scheduler* s, uint32_t pe, dls_chunk* out, int* exhausted);
DLS_API dls_status dls_scheduler_report(dls_scheduler* s, const dls_chunk* chunk, double exec_time_s,
                                        double sched_time_s);
DLS_API dls_status dls_scheduler_update_timestep(dls_scheduler* s, uint64_t timestep_index);
DLS_API dls_status dls_scheduler_carry_weights(const dls_scheduler* previous, dls_scheduler* next);
DLS_API uint64_t dls_scheduler_remaining(const dls_scheduler* s);
/* Copies min(cap, P) weights; *count receives P. */
DLS_API dls_status dls_scheduler_weights(const dls_scheduler* s, double* out, size_t cap, size_t* count);

DLS_API uint64_t dls_mfsc_chunk_size(uint64_t n, uint32_t pes);
DLS_API uint64_t dls_default_proc_min_chunk(uint64_t n, uint32_t pes);

/* ---- metrics ---------------------------------------------------------- */

DLS_API dls_status dls_cov(const double* finish_times, size_t count, double* out);
DLS_API dls_status dls_mean_max(const double* finish_times, size_t count, double* out);
DLS_API dls_status dls_percent_improvement(double baseline, double measured, double* out);

/* ---- traces ----------------------------------------------------------- */

typedef enum dls_trace_format { DLS_TRACE_JSON_LINES = 0, DLS_TRACE_CSV = 1 } dls_trace_format;
typedef enum dls_trace_level { DLS_LEVEL_PROCESS = 0, DLS_LEVEL_THREAD = 1 } dls_trace_level;
typedef enum dls_trace_kind {
  DLS_CHUNK_START = 0,
  DLS_CHUNK_END,
  DLS_WAIT_START,
  DLS_WAIT_END,
  DLS_TIMESTEP_START,
  DLS_TIMESTEP_END
} dls_trace_kind;

typedef struct dls_trace_event {
  dls_trace_level level;
  uint32_t rank;
  int has_thread;
  uint32_t thread;
  dls_trace_kind kind;
  double t;
  int has_chunk;
  uint64_t start;
  uint64_t size;
} dls_trace_event;

typedef struct dls_trace dls_trace;

typedef struct dls_wait_totals {
  double total_process_idle;
  double total_thread_idle;
  double max_rank_finish;
} dls_wait_totals;

DLS_API dls_status dls_trace_format_parse(const char* name, dls_trace_format* out);
DLS_API dls_status dls_trace_import(const char* path, dls_trace** out);
DLS_API dls_status dls_trace_export(const dls_trace* trace, const char* path, dls_trace_format fmt);
/* Writes to standard output. */
DLS_API dls_status dls_trace_print(const dls_trace* trace, dls_trace_format fmt);
DLS_API size_t dls_trace_size(const dls_trace* trace);
DLS_API dls_status dls_trace_event_at(const dls_trace* trace, size_t index, dls_trace_event* out);
/* DLS_E_TRACE on malformed traces; the message names the event index. */
DLS_API dls_status dls_trace_validate(const dls_trace* trace);
DLS_API dls_status dls_trace_wait_totals(const dls_trace* trace, dls_wait_totals* out);
DLS_API void dls_trace_destroy(dls_trace* trace);

/* ---- runtime ---------------------------------------------------------- */

typedef enum dls_transport { DLS_TRANSPORT_IN_PROCESS = 0, DLS_TRANSPORT_LOCAL_SOCKET = 1 } dls_transport;
typedef enum dls_trace_detail { DLS_TRACE_NONE = 0, DLS_TRACE_PROCESS = 1, DLS_TRACE_ALL = 2 } dls_trace_detail;

typedef struct dls_run_plan {
  uint64_t n;
  uint32_t ranks;
  uint32_t threads;
  dls_technique proc_technique;
  /* -1: DLS_THREAD_SCHEDULE environment variable, else STATIC */
  int thread_technique;
  /* 0: half the mFSC chunk */
  uint64_t proc_min_chunk;
  /* 0: environment variable, else 1 */
  uint64_t thread_min_chunk;
  uint32_t timesteps;
  dls_transport transport;
  uint64_t seed;
  int serialize_requests;
  int has_proc_fsc;
  double proc_fsc_overhead_s;
  double proc_fsc_sigma_s;
  int has_thread_fsc;
  double thread_fsc_overhead_s;
  double thread_fsc_sigma_s;
  const double* proc_weights;
  size_t proc_weight_count;
  dls_trace_detail trace;
} dls_run_plan;

typedef struct dls_task_context {
  uint64_t index;
  uint32_t rank;
  uint32_t thread;
  uint32_t timestep;
} dls_task_context;

/* Called concurrently from worker threads. Non-zero return aborts the run. */
typedef int (*dls_task_fn)(const dls_task_context* ctx, void* user);

typedef struct dls_runtime dls_runtime;
typedef struct dls_run_result dls_run_result;

DLS_API void dls_run_plan_init(dls_run_plan* plan);
/* DLS_E_SETUP for invalid plans or transport failures. */
DLS_API dls_status dls_runtime_create(const dls_run_plan* plan, dls_runtime** out);
DLS_API void dls_runtime_destroy(dls_runtime* rt);
/* Resolved values after defaults were applied. */
DLS_API uint64_t dls_runtime_proc_min_chunk(const dls_runtime* rt);
DLS_API dls_technique dls_runtime_thread_technique(const dls_runtime* rt);

/* On DLS_E_RUNTIME, *out (if non-NULL) receives the partial result. */
DLS_API dls_status dls_runtime_run(dls_runtime* rt, dls_task_fn fn, void* user, dls_run_result** out);
/* Fills out[0..timesteps). On failure no results are returned. */
DLS_API dls_status dls_runtime_run_timesteps(dls_runtime* rt, dls_task_fn fn, void* user,
                                             uint32_t timesteps, dls_run_result** out);

typedef struct dls_proc_chunk {
  uint32_t rank;
  uint64_t start;
  uint64_t size;
  uint64_t round;
  double exec_time;
  double sched_time;
} dls_proc_chunk;

typedef struct dls_thread_chunk {
  uint32_t rank;
  uint32_t thread;
  uint64_t start;
  uint64_t size;
  uint64_t proc_start;
  uint64_t proc_size;
  double t_start;
  double t_end;
} dls_thread_chunk;

typedef struct dls_imbalance {
  double cov;
  double mean_max;
  double max_finish;
} dls_imbalance;

DLS_API void dls_result_destroy(dls_run_result* r);
DLS_API uint32_t dls_result_timestep(const dls_run_result* r);
DLS_API double dls_result_wall_time(const dls_run_result* r);
DLS_API uint32_t dls_result_ranks(const dls_run_result* r);
DLS_API uint32_t dls_result_threads(const dls_run_result* r);
/* Copies min(cap, ranks) values. */
DLS_API size_t dls_result_rank_finish(const dls_run_result* r, double* out, size_t cap);
DLS_API size_t dls_result_thread_finish(const dls_run_result* r, uint32_t rank, double* out, size_t cap);
DLS_API size_t dls_result_rank_sched_time(const dls_run_result* r, double* out, size_t cap);
DLS_API size_t dls_result_rank_iterations(const dls_run_result* r, uint64_t* out, size_t cap);
DLS_API size_t dls_result_proc_weights(const dls_run_result* r, double* out, size_t cap);
DLS_API size_t dls_result_proc_chunk_count(const dls_run_result* r);
DLS_API dls_status dls_result_proc_chunk(const dls_run_result* r, size_t index, dls_proc_chunk* out);
DLS_API size_t dls_result_thread_chunk_count(const dls_run_result* r);
DLS_API dls_status dls_result_thread_chunk(const dls_run_result* r, size_t index, dls_thread_chunk* out);
DLS_API uint64_t dls_result_sched_events_proc(const dls_run_result* r);
DLS_API uint64_t dls_result_sched_events_thread(const dls_run_result* r);
/* Metrics over the rank finishing times. */
DLS_API dls_status dls_result_imbalance(const dls_run_result* r, dls_imbalance* out);
/* Copy of the recorded trace. */
DLS_API dls_status dls_result_trace(const dls_run_result* r, dls_trace** out);

/* ---- kernels ---------------------------------------------------------- */

typedef struct dls_workload dls_workload;

typedef enum dls_distribution {
  DLS_DIST_CONSTANT = 0,
  DLS_DIST_UNIFORM,
  DLS_DIST_GAUSSIAN,
  DLS_DIST_EXPONENTIAL,
  DLS_DIST_HOTSPOT
} dls_distribution;

typedef struct dls_mandelbrot_spec {
  uint32_t width;
  uint32_t height;
  uint32_t max_iterations;
  double center_real;
  double center_imag;
  double view_width;
  uint32_t scale_color;
} dls_mandelbrot_spec;

typedef struct dls_synthetic_spec {
  dls_distribution distribution;
  double base_us;
  double param_a;
  double param_b;
  uint64_t seed;
  double drift;
  const double* rank_multipliers; /* NULL: all ranks equal */
  size_t rank_multiplier_count;
} dls_synthetic_spec;

typedef struct dls_spin_image_spec {
  uint32_t width;
  double bin_size;
  double support_angle;
  const char* cloud_path; /* NULL: generate */
  uint64_t points;
  uint32_t clusters;
  double spread;
  double normal_noise;
  uint64_t seed;
} dls_spin_image_spec;

DLS_API dls_status dls_distribution_parse(const char* name, dls_distribution* out);
DLS_API void dls_mandelbrot_spec_init(dls_mandelbrot_spec* spec);
DLS_API void dls_synthetic_spec_init(dls_synthetic_spec* spec);
DLS_API void dls_spin_image_spec_init(dls_spin_image_spec* spec);

DLS_API dls_status dls_workload_mandelbrot(const dls_mandelbrot_spec* spec, dls_workload** out);
DLS_API dls_status dls_workload_synthetic(const dls_synthetic_spec* spec, uint64_t n, dls_workload** out);
DLS_API dls_status dls_workload_spin_image(const dls_spin_image_spec* spec, dls_workload** out);
DLS_API void dls_workload_destroy(dls_workload* w);
DLS_API uint64_t dls_workload_tasks(const dls_workload* w);
/* Executes one task; safe to call concurrently for distinct indices. */
DLS_API dls_status dls_workload_execute(dls_workload* w, const dls_task_context* ctx);
/* Task callback for dls_runtime_run; `user` must be the dls_workload. */
DLS_API int dls_workload_task(const dls_task_context* ctx, void* user);
/* Mandelbrot: PGM image. Spin images: CSV matrices separated by blank lines.
 * Synthetic: DLS_E_INVALID_ARGUMENT (no output). */
DLS_API dls_status dls_workload_write_output(const dls_workload* w, const char* path);
/* FNV-1a over the output bytes. */
DLS_API dls_status dls_workload_output_digest(const dls_workload* w, uint64_t* out);

/* Re-measures the busy-wait rate (spin iterations per microsecond). */
DLS_API double dls_calibrate_busy_wait(void);

#ifdef __cplusplus
}
#endif

#endif /* DLS_DLS_H */
