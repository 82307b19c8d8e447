// extern "C" surface over the C++ core. Every entry point converts
// exceptions into status codes and records the message per thread.
#include "dls/dls.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <variant>

#include "core/error.hpp"
#include "core/scheduler.hpp"
#include "core/technique.hpp"
#include "kernels/mandelbrot.hpp"
#include "kernels/spin_image.hpp"
#include "kernels/synthetic.hpp"
#include "metrics/imbalance.hpp"
#include "metrics/trace.hpp"
#include "runtime/runtime.hpp"

struct dls_scheduler {
  std::unique_ptr<dls::Scheduler> impl;
};

struct dls_trace {
  std::vector<dls::metrics::TraceEvent> events;
};

struct dls_runtime {
  std::unique_ptr<dls::runtime::Runtime> impl;
};

struct dls_run_result {
  dls::runtime::RunResult impl;
  std::uint32_t ranks = 0;
  std::uint32_t threads = 0;
};

namespace {

struct MandelbrotState {
  dls::kernels::MandelbrotParams params;
  std::vector<std::uint64_t> pixels;
};

struct SpinState {
  std::unique_ptr<dls::kernels::SpinImageParams> params;
  std::vector<std::vector<std::uint32_t>> images;
};

struct SyntheticState {
  std::unique_ptr<dls::kernels::SyntheticWorkload> workload;
};

}  // namespace

struct dls_workload {
  std::variant<MandelbrotState, SpinState, SyntheticState> state;
};

namespace {

thread_local std::string g_last_error;

dls_status to_status(dls::Errc code) {
  switch (code) {
    case dls::Errc::invalid_argument: return DLS_E_INVALID_ARGUMENT;
    case dls::Errc::missing_parameter: return DLS_E_MISSING_PARAMETER;
    case dls::Errc::protocol_violation: return DLS_E_PROTOCOL_VIOLATION;
    case dls::Errc::setup_error: return DLS_E_SETUP;
    case dls::Errc::undefined_metric: return DLS_E_UNDEFINED_METRIC;
    case dls::Errc::trace_error: return DLS_E_TRACE;
    case dls::Errc::io_error: return DLS_E_IO;
    case dls::Errc::runtime_failure: return DLS_E_RUNTIME;
  }
  return DLS_E_INTERNAL;
}

dls_status fail(dls_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
dls_status guarded(F&& body) {
  try {
    body();
    return DLS_OK;
  } catch (const dls::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(DLS_E_NO_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail(DLS_E_INTERNAL, e.what());
  } catch (...) {
    return fail(DLS_E_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw dls::Error(dls::Errc::invalid_argument, what);
}

dls::Technique to_cpp(dls_technique t) {
  require(t >= DLS_STATIC && t <= DLS_NODLB, "unknown technique id");
  return static_cast<dls::Technique>(t);
}

dls_technique to_c(dls::Technique t) { return static_cast<dls_technique>(t); }

dls_chunk to_c(const dls::ChunkAssignment& a) {
  return dls_chunk{a.pe, a.start, a.size, a.batch_id, a.round};
}

dls::ChunkAssignment to_cpp(const dls_chunk& c) {
  return dls::ChunkAssignment{c.pe, c.start, c.size, c.batch_id, c.round};
}

template <class T>
size_t copy_out(const std::vector<T>& src, T* out, size_t cap) {
  if (out) std::copy_n(src.begin(), std::min(cap, src.size()), out);
  return src.size();
}

std::string workload_output(const dls_workload& w) {
  if (auto* m = std::get_if<MandelbrotState>(&w.state))
    return dls::kernels::encode_pgm(m->pixels, m->params.width, m->params.height);
  if (auto* s = std::get_if<SpinState>(&w.state)) {
    std::ostringstream out;
    for (std::size_t i = 0; i < s->images.size(); ++i) {
      if (i) out << '\n';
      dls::kernels::write_spin_image_csv(out, s->images[i], s->params->width());
    }
    return out.str();
  }
  throw dls::Error(dls::Errc::invalid_argument, "synthetic workloads produce no output");
}

dls::metrics::TraceFormat trace_format(dls_trace_format fmt) {
  require(fmt == DLS_TRACE_JSON_LINES || fmt == DLS_TRACE_CSV, "unknown trace format id");
  return fmt == DLS_TRACE_CSV ? dls::metrics::TraceFormat::csv
                              : dls::metrics::TraceFormat::json_lines;
}

dls::runtime::TaskFn wrap_task(dls_task_fn fn, void* user) {
  return [fn, user](const dls::runtime::TaskContext& c) {
    dls_task_context ctx{c.index, c.rank, c.thread, c.timestep};
    if (int rc = fn(&ctx, user); rc != 0)
      throw dls::Error(dls::Errc::runtime_failure, "task " + std::to_string(c.index) +
                                                       " on rank " + std::to_string(c.rank) +
                                                       " returned " + std::to_string(rc));
  };
}

dls_run_result* make_result(const dls_runtime& rt, dls::runtime::RunResult r) {
  auto* out = new dls_run_result{std::move(r), rt.impl->plan().ranks, rt.impl->plan().threads};
  return out;
}

}  // namespace

extern "C" {

const char* dls_version(void) { return "1.0.0"; }

const char* dls_status_name(dls_status status) {
  switch (status) {
    case DLS_OK: return "ok";
    case DLS_E_INVALID_ARGUMENT: return "invalid-argument";
    case DLS_E_MISSING_PARAMETER: return "missing-parameter";
    case DLS_E_PROTOCOL_VIOLATION: return "protocol-violation";
    case DLS_E_SETUP: return "setup-error";
    case DLS_E_UNDEFINED_METRIC: return "undefined-metric";
    case DLS_E_TRACE: return "trace-error";
    case DLS_E_IO: return "io-error";
    case DLS_E_RUNTIME: return "runtime-failure";
    case DLS_E_NO_MEMORY: return "out-of-memory";
    case DLS_E_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* dls_last_error(void) { return g_last_error.c_str(); }

// ---- techniques

dls_status dls_technique_parse(const char* name, dls_technique* out) {
  return guarded([&] {
    require(name && out, "null argument");
    auto t = dls::parse_technique(name);
    if (!t)
      throw dls::Error(dls::Errc::invalid_argument, std::string("unknown technique '") + name +
                                                        "'; valid: " + dls::valid_technique_names());
    *out = to_c(*t);
  });
}

const char* dls_technique_name(dls_technique t) {
  if (t < DLS_STATIC || t > DLS_NODLB) return "?";
  // technique_name returns views over string literals
  return dls::technique_name(static_cast<dls::Technique>(t)).data();
}

const char* dls_technique_valid_names(void) {
  static const std::string names = dls::valid_technique_names();
  return names.c_str();
}

int dls_technique_is_adaptive(dls_technique t) {
  return t >= DLS_STATIC && t <= DLS_NODLB && dls::is_adaptive(static_cast<dls::Technique>(t));
}

int dls_technique_is_awf_family(dls_technique t) {
  return t >= DLS_STATIC && t <= DLS_NODLB && dls::is_awf_family(static_cast<dls::Technique>(t));
}

// ---- scheduler

void dls_scheduler_options_init(dls_scheduler_options* opts) {
  if (!opts) return;
  *opts = dls_scheduler_options{};
  opts->min_chunk = 1;
}

dls_status dls_scheduler_create(dls_technique t, uint64_t n, uint32_t pes,
                                const dls_scheduler_options* opts, dls_scheduler** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = nullptr;
    dls::SchedulerOptions o;
    if (opts) {
      o.min_chunk = opts->min_chunk ? opts->min_chunk : 1;
      o.seed = opts->seed;
      if (opts->has_fsc) o.fsc = dls::FscParams{opts->fsc_overhead_s, opts->fsc_sigma_s};
      if (opts->weights && opts->weight_count)
        o.initial_weights.assign(opts->weights, opts->weights + opts->weight_count);
    }
    auto s = std::make_unique<dls_scheduler>();
    s->impl = std::make_unique<dls::Scheduler>(to_cpp(t), n, pes, std::move(o));
    *out = s.release();
  });
}

void dls_scheduler_destroy(dls_scheduler* s) { delete s; }

dls_status dls_scheduler_next(dls_scheduler* s, uint32_t pe, dls_chunk* out, int* exhausted) {
  return guarded([&] {
    require(s && out && exhausted, "null argument");
    auto a = s->impl->next_chunk(pe);
    *exhausted = a ? 0 : 1;
    if (a) *out = to_c(*a);
  });
}

dls_status dls_scheduler_report(dls_scheduler* s, const dls_chunk* chunk, double exec_time_s,
                                double sched_time_s) {
  return guarded([&] {
    require(s && chunk, "null argument");
    s->impl->report_completion(to_cpp(*chunk), exec_time_s, sched_time_s);
  });
}

dls_status dls_scheduler_update_timestep(dls_scheduler* s, uint64_t timestep_index) {
  return guarded([&] {
    require(s != nullptr, "null scheduler");
    s->impl->update_weights_timestep(timestep_index);
  });
}

dls_status dls_scheduler_carry_weights(const dls_scheduler* previous, dls_scheduler* next) {
  return guarded([&] {
    require(previous && next, "null scheduler");
    dls::carry_weights(*previous->impl, *next->impl);
  });
}

uint64_t dls_scheduler_remaining(const dls_scheduler* s) { return s ? s->impl->remaining() : 0; }

dls_status dls_scheduler_weights(const dls_scheduler* s, double* out, size_t cap, size_t* count) {
  return guarded([&] {
    require(s != nullptr, "null scheduler");
    auto w = s->impl->weights();
    if (out) std::copy_n(w.begin(), std::min(cap, w.size()), out);
    if (count) *count = w.size();
  });
}

uint64_t dls_mfsc_chunk_size(uint64_t n, uint32_t pes) {
  return pes ? dls::mfsc_chunk_size(n, pes) : 0;
}

uint64_t dls_default_proc_min_chunk(uint64_t n, uint32_t pes) {
  return pes ? dls::default_proc_min_chunk(n, pes) : 0;
}

// ---- metrics

dls_status dls_cov(const double* finish_times, size_t count, double* out) {
  return guarded([&] {
    require(out && (finish_times || count == 0), "null argument");
    *out = dls::metrics::cov({finish_times, count});
  });
}

dls_status dls_mean_max(const double* finish_times, size_t count, double* out) {
  return guarded([&] {
    require(out && (finish_times || count == 0), "null argument");
    *out = dls::metrics::mean_max({finish_times, count});
  });
}

dls_status dls_percent_improvement(double baseline, double measured, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = dls::metrics::percent_improvement(baseline, measured);
  });
}

// ---- traces

dls_status dls_trace_format_parse(const char* name, dls_trace_format* out) {
  return guarded([&] {
    require(name && out, "null argument");
    auto f = dls::metrics::parse_trace_format(name);
    if (!f)
      throw dls::Error(dls::Errc::invalid_argument,
                       std::string("unknown trace format '") + name + "'; valid: json-lines, csv");
    *out = *f == dls::metrics::TraceFormat::csv ? DLS_TRACE_CSV : DLS_TRACE_JSON_LINES;
  });
}

dls_status dls_trace_import(const char* path, dls_trace** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    auto t = std::make_unique<dls_trace>();
    t->events = dls::metrics::import_trace(path);
    *out = t.release();
  });
}

dls_status dls_trace_export(const dls_trace* trace, const char* path, dls_trace_format fmt) {
  return guarded([&] {
    require(trace && path, "null argument");
    dls::metrics::export_trace(path, trace->events, trace_format(fmt));
  });
}

dls_status dls_trace_print(const dls_trace* trace, dls_trace_format fmt) {
  return guarded([&] {
    require(trace != nullptr, "null trace");
    dls::metrics::write_trace(std::cout, trace->events, trace_format(fmt));
    std::cout.flush();
    if (!std::cout) throw dls::Error(dls::Errc::io_error, "writing trace to standard output failed");
  });
}

size_t dls_trace_size(const dls_trace* trace) { return trace ? trace->events.size() : 0; }

dls_status dls_trace_event_at(const dls_trace* trace, size_t index, dls_trace_event* out) {
  return guarded([&] {
    require(trace && out, "null argument");
    require(index < trace->events.size(), "trace event index out of range");
    const auto& e = trace->events[index];
    *out = dls_trace_event{};
    out->level = e.level == dls::metrics::TraceLevel::thread ? DLS_LEVEL_THREAD : DLS_LEVEL_PROCESS;
    out->rank = e.rank;
    out->has_thread = e.thread.has_value();
    out->thread = e.thread.value_or(0);
    out->kind = static_cast<dls_trace_kind>(e.kind);
    out->t = e.t;
    out->has_chunk = e.start.has_value() && e.size.has_value();
    out->start = e.start.value_or(0);
    out->size = e.size.value_or(0);
  });
}

dls_status dls_trace_validate(const dls_trace* trace) {
  return guarded([&] {
    require(trace != nullptr, "null trace");
    dls::metrics::validate_trace(trace->events);
  });
}

dls_status dls_trace_wait_totals(const dls_trace* trace, dls_wait_totals* out) {
  return guarded([&] {
    require(trace && out, "null argument");
    auto d = dls::metrics::wait_decomposition(trace->events);
    out->total_process_idle = d.total_process_idle;
    out->total_thread_idle = d.total_thread_idle;
    out->max_rank_finish = 0.0;
    for (double f : d.rank_finish) out->max_rank_finish = std::max(out->max_rank_finish, f);
  });
}

void dls_trace_destroy(dls_trace* trace) { delete trace; }

// ---- runtime

void dls_run_plan_init(dls_run_plan* plan) {
  if (!plan) return;
  *plan = dls_run_plan{};
  plan->ranks = 1;
  plan->threads = 1;
  plan->proc_technique = DLS_NODLB;
  plan->thread_technique = -1;
  plan->timesteps = 1;
  plan->transport = DLS_TRANSPORT_IN_PROCESS;
  plan->trace = DLS_TRACE_ALL;
}

dls_status dls_runtime_create(const dls_run_plan* plan, dls_runtime** out) {
  return guarded([&] {
    require(plan && out, "null argument");
    *out = nullptr;
    dls::runtime::RunPlan p;
    p.n = plan->n;
    p.ranks = plan->ranks;
    p.threads = plan->threads;
    p.proc_technique = to_cpp(plan->proc_technique);
    if (plan->thread_technique >= 0)
      p.thread_technique = to_cpp(static_cast<dls_technique>(plan->thread_technique));
    if (plan->proc_min_chunk) p.proc_min_chunk = plan->proc_min_chunk;
    if (plan->thread_min_chunk) p.thread_min_chunk = plan->thread_min_chunk;
    p.timesteps = plan->timesteps;
    require(plan->transport == DLS_TRANSPORT_IN_PROCESS ||
                plan->transport == DLS_TRANSPORT_LOCAL_SOCKET,
            "unknown transport id");
    p.transport = plan->transport == DLS_TRANSPORT_LOCAL_SOCKET
                      ? dls::runtime::TransportKind::local_socket
                      : dls::runtime::TransportKind::in_process;
    p.seed = plan->seed;
    p.serialize_requests = plan->serialize_requests != 0;
    if (plan->has_proc_fsc)
      p.proc_fsc = dls::FscParams{plan->proc_fsc_overhead_s, plan->proc_fsc_sigma_s};
    if (plan->has_thread_fsc)
      p.thread_fsc = dls::FscParams{plan->thread_fsc_overhead_s, plan->thread_fsc_sigma_s};
    if (plan->proc_weights && plan->proc_weight_count)
      p.proc_weights.assign(plan->proc_weights, plan->proc_weights + plan->proc_weight_count);
    require(plan->trace >= DLS_TRACE_NONE && plan->trace <= DLS_TRACE_ALL, "unknown trace detail");
    p.trace = static_cast<dls::runtime::TraceDetail>(plan->trace);
    auto rt = std::make_unique<dls_runtime>();
    rt->impl = std::make_unique<dls::runtime::Runtime>(std::move(p));
    *out = rt.release();
  });
}

void dls_runtime_destroy(dls_runtime* rt) { delete rt; }

uint64_t dls_runtime_proc_min_chunk(const dls_runtime* rt) {
  return rt ? rt->impl->plan().proc_min_chunk.value_or(0) : 0;
}

dls_technique dls_runtime_thread_technique(const dls_runtime* rt) {
  return rt ? to_c(rt->impl->plan().thread_technique.value_or(dls::Technique::static_block))
            : DLS_STATIC;
}

dls_status dls_runtime_run(dls_runtime* rt, dls_task_fn fn, void* user, dls_run_result** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(rt && fn, "null argument");
    try {
      auto r = rt->impl->run_loop(wrap_task(fn, user));
      if (out) *out = make_result(*rt, std::move(r));
    } catch (const dls::runtime::RunAborted& e) {
      if (out) *out = make_result(*rt, e.partial());
      throw;
    }
  });
}

dls_status dls_runtime_run_timesteps(dls_runtime* rt, dls_task_fn fn, void* user,
                                     uint32_t timesteps, dls_run_result** out) {
  return guarded([&] {
    require(rt && fn && out, "null argument");
    auto rs = rt->impl->run_timesteps(wrap_task(fn, user), timesteps);
    std::vector<std::unique_ptr<dls_run_result>> owned;
    owned.reserve(rs.size());
    for (auto& r : rs) owned.emplace_back(make_result(*rt, std::move(r)));
    for (std::size_t i = 0; i < owned.size(); ++i) out[i] = owned[i].release();
  });
}

// ---- results

void dls_result_destroy(dls_run_result* r) { delete r; }
uint32_t dls_result_timestep(const dls_run_result* r) { return r ? r->impl.timestep : 0; }
double dls_result_wall_time(const dls_run_result* r) { return r ? r->impl.wall_time : 0.0; }
uint32_t dls_result_ranks(const dls_run_result* r) { return r ? r->ranks : 0; }
uint32_t dls_result_threads(const dls_run_result* r) { return r ? r->threads : 0; }

size_t dls_result_rank_finish(const dls_run_result* r, double* out, size_t cap) {
  return r ? copy_out(r->impl.rank_finish, out, cap) : 0;
}

size_t dls_result_thread_finish(const dls_run_result* r, uint32_t rank, double* out, size_t cap) {
  if (!r || rank >= r->impl.thread_finish.size()) return 0;
  return copy_out(r->impl.thread_finish[rank], out, cap);
}

size_t dls_result_rank_sched_time(const dls_run_result* r, double* out, size_t cap) {
  return r ? copy_out(r->impl.rank_sched_time, out, cap) : 0;
}

size_t dls_result_rank_iterations(const dls_run_result* r, uint64_t* out, size_t cap) {
  if (!r) return 0;
  const auto& v = r->impl.rank_iterations;
  if (out)
    for (std::size_t i = 0; i < std::min(cap, v.size()); ++i) out[i] = v[i];
  return v.size();
}

size_t dls_result_proc_weights(const dls_run_result* r, double* out, size_t cap) {
  return r ? copy_out(r->impl.proc_weights, out, cap) : 0;
}

size_t dls_result_proc_chunk_count(const dls_run_result* r) {
  return r ? r->impl.proc_chunks.size() : 0;
}

dls_status dls_result_proc_chunk(const dls_run_result* r, size_t index, dls_proc_chunk* out) {
  return guarded([&] {
    require(r && out, "null argument");
    require(index < r->impl.proc_chunks.size(), "chunk index out of range");
    const auto& c = r->impl.proc_chunks[index];
    *out = dls_proc_chunk{c.rank, c.start, c.size, c.round, c.exec_time, c.sched_time};
  });
}

size_t dls_result_thread_chunk_count(const dls_run_result* r) {
  return r ? r->impl.thread_chunks.size() : 0;
}

dls_status dls_result_thread_chunk(const dls_run_result* r, size_t index, dls_thread_chunk* out) {
  return guarded([&] {
    require(r && out, "null argument");
    require(index < r->impl.thread_chunks.size(), "chunk index out of range");
    const auto& c = r->impl.thread_chunks[index];
    *out = dls_thread_chunk{c.rank,       c.thread,    c.start,   c.size,
                            c.proc_start, c.proc_size, c.t_start, c.t_end};
  });
}

uint64_t dls_result_sched_events_proc(const dls_run_result* r) {
  return r ? r->impl.sched_events_proc() : 0;
}

uint64_t dls_result_sched_events_thread(const dls_run_result* r) {
  return r ? r->impl.sched_events_thread() : 0;
}

dls_status dls_result_imbalance(const dls_run_result* r, dls_imbalance* out) {
  return guarded([&] {
    require(r && out, "null argument");
    auto rep = dls::metrics::imbalance_report(r->impl.rank_finish);
    *out = dls_imbalance{rep.cov, rep.mean_max, rep.max_finish};
  });
}

dls_status dls_result_trace(const dls_run_result* r, dls_trace** out) {
  return guarded([&] {
    require(r && out, "null argument");
    *out = nullptr;
    auto t = std::make_unique<dls_trace>();
    t->events = r->impl.trace;
    *out = t.release();
  });
}

// ---- kernels

dls_status dls_distribution_parse(const char* name, dls_distribution* out) {
  return guarded([&] {
    require(name && out, "null argument");
    auto d = dls::kernels::parse_distribution(name);
    if (!d)
      throw dls::Error(dls::Errc::invalid_argument,
                       std::string("unknown distribution '") + name +
                           "'; valid: constant, uniform, gaussian, exponential, hotspot");
    *out = static_cast<dls_distribution>(*d);
  });
}

void dls_mandelbrot_spec_init(dls_mandelbrot_spec* spec) {
  if (!spec) return;
  *spec = dls_mandelbrot_spec{512,
                              512,
                              10000,
                              dls::kernels::kSeahorseCenterReal,
                              dls::kernels::kSeahorseCenterImag,
                              dls::kernels::kSeahorseWidth,
                              1};
}

void dls_synthetic_spec_init(dls_synthetic_spec* spec) {
  if (!spec) return;
  *spec = dls_synthetic_spec{};
  spec->distribution = DLS_DIST_CONSTANT;
  spec->base_us = 100.0;
}

void dls_spin_image_spec_init(dls_spin_image_spec* spec) {
  if (!spec) return;
  *spec = dls_spin_image_spec{};
  dls::kernels::PointCloudSpec cloud;
  spec->width = 16;
  spec->bin_size = 0.05;
  spec->support_angle = 1.0471975511965976;  // 60 degrees
  spec->points = cloud.points;
  spec->clusters = cloud.clusters;
  spec->spread = cloud.spread;
  spec->normal_noise = cloud.normal_noise;
}

dls_status dls_workload_mandelbrot(const dls_mandelbrot_spec* spec, dls_workload** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    *out = nullptr;
    MandelbrotState m;
    m.params = dls::kernels::mandelbrot_params(spec->width, spec->height, spec->max_iterations,
                                               spec->center_real, spec->center_imag,
                                               spec->view_width, spec->scale_color);
    m.pixels.assign(m.params.tasks(), 0);
    *out = new dls_workload{std::move(m)};
  });
}

dls_status dls_workload_synthetic(const dls_synthetic_spec* spec, uint64_t n, dls_workload** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    *out = nullptr;
    require(spec->distribution >= DLS_DIST_CONSTANT && spec->distribution <= DLS_DIST_HOTSPOT,
            "unknown distribution id");
    dls::kernels::SyntheticSpec s;
    s.distribution = static_cast<dls::kernels::Distribution>(spec->distribution);
    s.base_us = spec->base_us;
    s.param_a = spec->param_a;
    s.param_b = spec->param_b;
    s.seed = spec->seed;
    s.drift = spec->drift;
    std::vector<double> mult;
    if (spec->rank_multipliers && spec->rank_multiplier_count)
      mult.assign(spec->rank_multipliers, spec->rank_multipliers + spec->rank_multiplier_count);
    SyntheticState st;
    st.workload = std::make_unique<dls::kernels::SyntheticWorkload>(s, n, std::move(mult));
    *out = new dls_workload{std::move(st)};
  });
}

dls_status dls_workload_spin_image(const dls_spin_image_spec* spec, dls_workload** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    *out = nullptr;
    std::vector<dls::kernels::OrientedPoint> points;
    if (spec->cloud_path) {
      points = dls::kernels::load_point_cloud(spec->cloud_path);
    } else {
      dls::kernels::PointCloudSpec cloud;
      cloud.points = spec->points;
      cloud.clusters = spec->clusters;
      cloud.spread = spec->spread;
      cloud.normal_noise = spec->normal_noise;
      cloud.seed = spec->seed;
      points = dls::kernels::generate_point_cloud(cloud);
    }
    SpinState s;
    s.params = std::make_unique<dls::kernels::SpinImageParams>(spec->width, spec->bin_size,
                                                               spec->support_angle,
                                                               std::move(points));
    s.images.resize(s.params->tasks());
    *out = new dls_workload{std::move(s)};
  });
}

void dls_workload_destroy(dls_workload* w) { delete w; }

uint64_t dls_workload_tasks(const dls_workload* w) {
  if (!w) return 0;
  if (auto* m = std::get_if<MandelbrotState>(&w->state)) return m->params.tasks();
  if (auto* s = std::get_if<SpinState>(&w->state)) return s->params->tasks();
  return std::get<SyntheticState>(w->state).workload->size();
}

dls_status dls_workload_execute(dls_workload* w, const dls_task_context* ctx) {
  return guarded([&] {
    require(w && ctx, "null argument");
    require(ctx->index < dls_workload_tasks(w), "task index out of range");
    if (auto* m = std::get_if<MandelbrotState>(&w->state)) {
      m->pixels[ctx->index] = dls::kernels::mandelbrot_pixel(ctx->index, m->params);
    } else if (auto* s = std::get_if<SpinState>(&w->state)) {
      s->images[ctx->index] = dls::kernels::spin_image(ctx->index, *s->params);
    } else {
      std::get<SyntheticState>(w->state).workload->run(ctx->index, ctx->timestep, ctx->rank);
    }
  });
}

int dls_workload_task(const dls_task_context* ctx, void* user) {
  return dls_workload_execute(static_cast<dls_workload*>(user), ctx) == DLS_OK ? 0 : 1;
}

dls_status dls_workload_write_output(const dls_workload* w, const char* path) {
  return guarded([&] {
    require(w && path, "null argument");
    if (auto* m = std::get_if<MandelbrotState>(&w->state)) {
      dls::kernels::write_pgm(path, m->pixels, m->params.width, m->params.height);
      return;
    }
    const std::string bytes = workload_output(*w);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw dls::Error(dls::Errc::io_error, std::string("cannot open ") + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw dls::Error(dls::Errc::io_error, std::string("write failed: ") + path);
  });
}

dls_status dls_workload_output_digest(const dls_workload* w, uint64_t* out) {
  return guarded([&] {
    require(w && out, "null argument");
    const std::string bytes = workload_output(*w);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    *out = h;
  });
}

double dls_calibrate_busy_wait(void) { return dls::kernels::recalibrate_spin_rate(); }

}  // extern "C"
