#include "bench/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct WorkloadDeleter {
  void operator()(dls_workload* w) const { dls_workload_destroy(w); }
};
struct RuntimeDeleter {
  void operator()(dls_runtime* r) const { dls_runtime_destroy(r); }
};
struct ResultDeleter {
  void operator()(dls_run_result* r) const { dls_result_destroy(r); }
};
struct TraceDeleter {
  void operator()(dls_trace* t) const { dls_trace_destroy(t); }
};
using WorkloadPtr = std::unique_ptr<dls_workload, WorkloadDeleter>;
using RuntimePtr = std::unique_ptr<dls_runtime, RuntimeDeleter>;
using ResultPtr = std::unique_ptr<dls_run_result, ResultDeleter>;
using TracePtr = std::unique_ptr<dls_trace, TraceDeleter>;

[[noreturn]] void throw_last(const std::string& what) {
  throw std::runtime_error(what + ": " + dls_last_error());
}

void check(dls_status st, const std::string& what) {
  if (st != DLS_OK) throw_last(what);
}

WorkloadPtr make_workload(const BenchConfig& c) {
  dls_workload* w = nullptr;
  switch (c.kernel) {
    case Kernel::mandelbrot:
      check(dls_workload_mandelbrot(&c.mandelbrot, &w), "mandelbrot kernel");
      break;
    case Kernel::spinimage: {
      dls_spin_image_spec spec = c.spin;
      spec.cloud_path = c.cloud_file.empty() ? nullptr : c.cloud_file.c_str();
      check(dls_workload_spin_image(&spec, &w), "spin-image kernel");
      break;
    }
    case Kernel::synthetic:
    case Kernel::timestep: {
      dls_synthetic_spec spec = c.synthetic;
      spec.rank_multipliers = c.rank_multipliers.empty() ? nullptr : c.rank_multipliers.data();
      spec.rank_multiplier_count = c.rank_multipliers.size();
      check(dls_workload_synthetic(&spec, c.n, &w), "synthetic kernel");
      break;
    }
  }
  return WorkloadPtr(w);
}

RuntimePtr make_runtime(const BenchConfig& c, dls_technique proc, dls_technique thread,
                        std::uint64_t n) {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  plan.n = n;
  plan.ranks = c.ranks;
  plan.threads = c.threads;
  plan.proc_technique = proc;
  plan.thread_technique = thread;
  plan.proc_min_chunk = c.proc_min_chunk;
  plan.thread_min_chunk = c.thread_min_chunk;
  plan.timesteps = c.steps_per_run();
  plan.transport = c.transport;
  plan.seed = c.seed;
  plan.serialize_requests = c.serialize_requests;
  if (c.proc_fsc) {
    plan.has_proc_fsc = 1;
    plan.proc_fsc_overhead_s = c.proc_fsc->overhead_s;
    plan.proc_fsc_sigma_s = c.proc_fsc->sigma_s;
  }
  if (c.thread_fsc) {
    plan.has_thread_fsc = 1;
    plan.thread_fsc_overhead_s = c.thread_fsc->overhead_s;
    plan.thread_fsc_sigma_s = c.thread_fsc->sigma_s;
  }
  plan.trace = c.trace_detail;
  dls_runtime* rt = nullptr;
  check(dls_runtime_create(&plan, &rt),
        std::string(dls_technique_name(proc)) + "_" + dls_technique_name(thread));
  return RuntimePtr(rt);
}

std::vector<ResultPtr> run_steps(dls_runtime* rt, dls_workload* w, std::uint32_t steps) {
  std::vector<ResultPtr> out;
  if (steps == 1) {
    dls_run_result* r = nullptr;
    const dls_status st = dls_runtime_run(rt, dls_workload_task, w, &r);
    ResultPtr owned(r);
    if (st != DLS_OK) throw_last("run failed");
    out.push_back(std::move(owned));
    return out;
  }
  std::vector<dls_run_result*> raw(steps, nullptr);
  check(dls_runtime_run_timesteps(rt, dls_workload_task, w, steps, raw.data()), "run failed");
  for (auto* r : raw) out.emplace_back(r);
  return out;
}

struct StepMetrics {
  double wall = 0.0;
  double cov = 0.0;
  double mean_max = 1.0;
  std::uint64_t sp = 0;
  std::uint64_t st = 0;
};

StepMetrics step_metrics(const dls_run_result* r) {
  StepMetrics m;
  m.wall = dls_result_wall_time(r);
  dls_imbalance imb;
  // all-zero finish times leave the metrics undefined; report balance then
  if (dls_result_imbalance(r, &imb) == DLS_OK) {
    m.cov = imb.cov;
    m.mean_max = imb.mean_max;
  }
  m.sp = dls_result_sched_events_proc(r);
  m.st = dls_result_sched_events_thread(r);
  return m;
}

void append_chunk_log(std::string& log, std::uint32_t rep, const dls_run_result* r) {
  const auto step = std::to_string(dls_result_timestep(r));
  std::vector<dls_proc_chunk> proc(dls_result_proc_chunk_count(r));
  for (std::size_t i = 0; i < proc.size(); ++i) dls_result_proc_chunk(r, i, &proc[i]);
  std::sort(proc.begin(), proc.end(),
            [](const auto& a, const auto& b) { return a.round < b.round; });
  for (const auto& c : proc)
    log += std::to_string(rep) + "," + step + ",process," + std::to_string(c.rank) + "," +
           std::to_string(c.start) + "," + std::to_string(c.size) + "," + std::to_string(c.round) +
           "\n";
  // which thread took a sub-chunk is a race; the sub-chunk ranges are not
  std::vector<dls_thread_chunk> thr(dls_result_thread_chunk_count(r));
  for (std::size_t i = 0; i < thr.size(); ++i) dls_result_thread_chunk(r, i, &thr[i]);
  std::sort(thr.begin(), thr.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (const auto& c : thr)
    log += std::to_string(rep) + "," + step + ",thread," + std::to_string(c.rank) + "," +
           std::to_string(c.start) + "," + std::to_string(c.size) + ",\n";
}

struct CellContext {
  const BenchConfig& config;
  std::uint64_t digest;
  bool oversubscribed;
  fs::path cells_dir;
  fs::path traces_dir;
};

void save_trace(const CellContext& ctx, const std::string& id, std::uint32_t rep,
                const dls_run_result* r, bool multi_step) {
  const auto& c = ctx.config;
  if (c.trace_detail == DLS_TRACE_NONE || c.trace_keep == TraceKeep::none) return;
  if (c.trace_keep == TraceKeep::first && rep != 0) return;
  std::string name = id + ".rep" + std::to_string(rep);
  if (multi_step) name += ".step" + std::to_string(dls_result_timestep(r));
  name += c.trace_format == DLS_TRACE_CSV ? ".trace.csv" : ".trace.jsonl";
  dls_trace* t = nullptr;
  check(dls_result_trace(r, &t), "trace");
  TracePtr owned(t);
  check(dls_trace_export(t, (ctx.traces_dir / name).c_str(), c.trace_format), "trace export");
}

CellRecord run_cell(const CellContext& ctx, dls_technique proc, dls_technique thread) {
  const auto& c = ctx.config;
  CellRecord rec;
  rec.proc = dls_technique_name(proc);
  rec.thread = dls_technique_name(thread);
  rec.digest = ctx.digest;
  rec.oversubscribed = ctx.oversubscribed;
  const std::string id = cell_id(rec.proc, rec.thread);

  WorkloadPtr w = make_workload(c);
  RuntimePtr rt = make_runtime(c, proc, thread, dls_workload_tasks(w.get()));
  std::string chunks = "repetition,timestep,level,rank,start,size,round\n";

  if (c.warmup) run_steps(rt.get(), w.get(), 1);

  if (c.measure == Measure::timesteps) {
    auto results = run_steps(rt.get(), w.get(), c.repetitions);
    for (std::uint32_t i = 0; i < results.size(); ++i) {
      const auto m = step_metrics(results[i].get());
      rec.rows.push_back({i, m.wall, m.cov, m.mean_max, m.sp, m.st});
      append_chunk_log(chunks, i, results[i].get());
      save_trace(ctx, id, i, results[i].get(), false);
    }
  } else {
    const std::uint32_t steps = c.timesteps;
    for (std::uint32_t rep = 0; rep < c.repetitions; ++rep) {
      auto results = run_steps(rt.get(), w.get(), steps);
      RepRow row{rep, 0.0, 0.0, 0.0, 0, 0};
      for (const auto& r : results) {
        const auto m = step_metrics(r.get());
        row.wall_time_s += m.wall;
        row.cov += m.cov / steps;
        row.mean_max += m.mean_max / steps;
        row.sched_events_proc += m.sp;
        row.sched_events_thread += m.st;
        append_chunk_log(chunks, rep, r.get());
        save_trace(ctx, id, rep, r.get(), steps > 1);
      }
      rec.rows.push_back(row);
    }
  }

  std::uint64_t digest;
  if (dls_workload_output_digest(w.get(), &digest) == DLS_OK) rec.output_digest = digest;
  write_file_atomic(ctx.cells_dir / (id + ".chunks.csv"), chunks);
  rec.ok = true;
  return rec;
}

std::optional<CellRecord> reusable(const fs::path& file, std::uint64_t digest) {
  if (!fs::exists(file)) return std::nullopt;
  try {
    std::ifstream f(file);
    CellRecord rec = cell_from_json(json::parse(f));
    if (rec.ok && rec.digest == digest) return rec;
  } catch (const std::exception&) {
    // unreadable or truncated records are simply re-run
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::pair<dls_technique, dls_technique>> sweep_cells(const BenchConfig& c) {
  std::vector<std::pair<dls_technique, dls_technique>> cells;
  const bool has_proc =
      std::find(c.proc_techniques.begin(), c.proc_techniques.end(), DLS_NODLB) != c.proc_techniques.end();
  const bool has_thread = std::find(c.thread_techniques.begin(), c.thread_techniques.end(),
                                    DLS_STATIC) != c.thread_techniques.end();
  if (!has_proc || !has_thread) cells.emplace_back(DLS_NODLB, DLS_STATIC);
  for (auto p : c.proc_techniques)
    for (auto t : c.thread_techniques) cells.emplace_back(p, t);
  return cells;
}

SweepSummary aggregate_sweep(const fs::path& dir) {
  SweepSummary s = load_sweep(dir);
  write_file_atomic(dir / "sweep.json", summary_to_json(s).dump(2) + "\n");
  write_csv_report(s, dir);
  return s;
}

SweepOutcome run_sweep(const BenchConfig& c, const SweepOptions& options) {
  SweepOutcome out;
  std::ostream* log = options.log;
  const fs::path dir = c.output;
  const auto cells = sweep_cells(c);

  // everything that can be wrong with the config is reported before any run
  const unsigned cores =
      options.logical_cores ? options.logical_cores : std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t workers = std::uint64_t{c.ranks} * c.threads;
  const bool oversubscribed = workers > cores;
  if (oversubscribed && !c.allow_oversubscribe)
    out.errors.push_back("P*T = " + std::to_string(workers) + " workers exceed " +
                         std::to_string(cores) +
                         " logical cores; pass --allow-oversubscribe to run anyway");
  std::uint64_t n = c.n;
  try {
    n = dls_workload_tasks(make_workload(c).get());
  } catch (const std::exception& e) {
    out.errors.push_back(e.what());
  }
  if (out.errors.empty()) {
    for (const auto& [p, t] : cells) {
      try {
        make_runtime(c, p, t, n);
      } catch (const std::exception& e) {
        out.errors.push_back(e.what());
      }
    }
  }
  if (!out.errors.empty()) {
    out.exit_code = kExitConfig;
    return out;
  }

  const fs::path cells_dir = dir / "cells";
  const fs::path traces_dir = dir / "traces";
  try {
    fs::create_directories(cells_dir);
    fs::create_directories(traces_dir);
    write_file_atomic(dir / "config.json", config_to_json(c).dump(2) + "\n");
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("output directory ") + dir.string() + ": " + e.what());
    out.exit_code = kExitRuntime;
    return out;
  }

  CellContext ctx{c, run_digest(c), oversubscribed, cells_dir, traces_dir};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [p, t] = cells[i];
    const std::string id = cell_id(dls_technique_name(p), dls_technique_name(t));
    const fs::path file = cells_dir / (id + ".json");
    const std::string tag = "[" + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + "] " +
                            dls_technique_name(p) + " x " + dls_technique_name(t);
    if (reusable(file, ctx.digest)) {
      ++out.reused;
      if (log) *log << tag << ": reused\n" << std::flush;
      continue;
    }
    CellRecord rec;
    try {
      if (options.before_cell) options.before_cell(p, t);
      rec = run_cell(ctx, p, t);
      ++out.executed;
    } catch (const std::exception& e) {
      rec = CellRecord{};
      rec.proc = dls_technique_name(p);
      rec.thread = dls_technique_name(t);
      rec.digest = ctx.digest;
      rec.oversubscribed = oversubscribed;
      rec.error = e.what();
      ++out.failed;
    }
    try {
      write_file_atomic(file, cell_to_json(rec).dump(1) + "\n");
    } catch (const std::exception& e) {
      out.errors.push_back(e.what());
      out.exit_code = kExitRuntime;
      return out;
    }
    if (log) {
      if (rec.ok) {
        double total = 0.0;
        for (const auto& r : rec.rows) total += r.wall_time_s;
        *log << tag << ": mean " << total / static_cast<double>(rec.rows.size()) << " s\n";
      } else {
        *log << tag << ": FAILED: " << rec.error << "\n";
      }
      log->flush();
    }
  }

  try {
    out.summary = aggregate_sweep(dir);
  } catch (const std::exception& e) {
    out.errors.push_back(e.what());
    out.exit_code = kExitRuntime;
    return out;
  }
  if (out.failed == cells.size()) out.exit_code = kExitRuntime;
  else if (out.failed > 0) out.exit_code = kExitPartial;
  return out;
}

}  // namespace bench
