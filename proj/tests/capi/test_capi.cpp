#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dls/dls.h"

extern "C" int dls_header_is_c(void);

namespace {

struct Counter {
  std::vector<std::atomic<int>> hits;
  explicit Counter(std::size_t n) : hits(n) {}
};

int count_task(const dls_task_context* ctx, void* user) {
  static_cast<Counter*>(user)->hits[ctx->index].fetch_add(1);
  return 0;
}

int failing_task(const dls_task_context* ctx, void*) { return ctx->index == 7 ? 42 : 0; }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dls_capi_" + name);
}

}  // namespace

TEST_CASE("header is usable from C") { CHECK(dls_header_is_c() == 1); }

TEST_CASE("technique parsing reports the valid set") {
  dls_technique t;
  REQUIRE(dls_technique_parse("awf_c", &t) == DLS_OK);
  CHECK(t == DLS_AWF_C);
  CHECK(std::string(dls_technique_name(t)) == "AWF-C");
  CHECK(dls_technique_parse("GUIDED", &t) == DLS_E_INVALID_ARGUMENT);
  std::string msg = dls_last_error();
  CHECK(msg.find("GUIDED") != std::string::npos);
  CHECK(msg.find("mFSC") != std::string::npos);
  CHECK(dls_technique_is_awf_family(DLS_AWF));
  CHECK_FALSE(dls_technique_is_adaptive(DLS_GSS));
}

TEST_CASE("scheduler handle reproduces the GSS sequence") {
  dls_scheduler* s = nullptr;
  REQUIRE(dls_scheduler_create(DLS_GSS, 100, 4, nullptr, &s) == DLS_OK);
  std::vector<uint64_t> sizes;
  dls_chunk c;
  int done = 0;
  for (uint32_t pe = 0;; pe = (pe + 1) % 4) {
    REQUIRE(dls_scheduler_next(s, pe, &c, &done) == DLS_OK);
    if (done) break;
    sizes.push_back(c.size);
    REQUIRE(dls_scheduler_report(s, &c, 1e-3, 0.0) == DLS_OK);
  }
  CHECK(sizes == std::vector<uint64_t>{25, 19, 14, 11, 8, 6, 5, 3, 3, 2, 1, 1, 1, 1});
  CHECK(dls_scheduler_remaining(s) == 0);
  dls_scheduler_destroy(s);
}

TEST_CASE("scheduler errors map to status codes") {
  dls_scheduler* s = nullptr;
  CHECK(dls_scheduler_create(DLS_FSC, 100, 4, nullptr, &s) == DLS_E_MISSING_PARAMETER);
  CHECK(s == nullptr);
  CHECK(dls_scheduler_create(DLS_GSS, 100, 0, nullptr, &s) != DLS_OK);
  CHECK(dls_scheduler_create(DLS_GSS, 100, 4, nullptr, nullptr) == DLS_E_INVALID_ARGUMENT);
  CHECK(dls_mfsc_chunk_size(1000000, 12) == 5098);
  CHECK(dls_default_proc_min_chunk(1000000, 12) == 2549);
}

TEST_CASE("metrics through the C API") {
  double v = 0;
  const double f[] = {1.0, 1.0, 2.0, 2.0};
  REQUIRE(dls_cov(f, 4, &v) == DLS_OK);
  CHECK(v == doctest::Approx(1.0 / 3.0));
  REQUIRE(dls_mean_max(f, 4, &v) == DLS_OK);
  CHECK(v == doctest::Approx(0.75));
  CHECK(dls_cov(f, 0, &v) == DLS_E_UNDEFINED_METRIC);
  REQUIRE(dls_percent_improvement(10.0, 7.5, &v) == DLS_OK);
  CHECK(v == doctest::Approx(25.0));
}

TEST_CASE("runtime executes every task once and exposes results") {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  plan.n = 500;
  plan.ranks = 3;
  plan.threads = 2;
  plan.proc_technique = DLS_FAC;
  plan.thread_technique = DLS_GSS;
  dls_runtime* rt = nullptr;
  REQUIRE(dls_runtime_create(&plan, &rt) == DLS_OK);
  CHECK(dls_runtime_thread_technique(rt) == DLS_GSS);
  CHECK(dls_runtime_proc_min_chunk(rt) >= 1);

  Counter counter(500);
  dls_run_result* r = nullptr;
  REQUIRE(dls_runtime_run(rt, count_task, &counter, &r) == DLS_OK);
  for (auto& h : counter.hits) CHECK(h.load() == 1);

  CHECK(dls_result_ranks(r) == 3);
  std::vector<double> finish(3);
  CHECK(dls_result_rank_finish(r, finish.data(), finish.size()) == 3);
  for (double x : finish) CHECK(x <= dls_result_wall_time(r));
  std::vector<uint64_t> its(3);
  dls_result_rank_iterations(r, its.data(), 3);
  CHECK(its[0] + its[1] + its[2] == 500);

  uint64_t covered = 0;
  for (size_t i = 0; i < dls_result_proc_chunk_count(r); ++i) {
    dls_proc_chunk pc;
    REQUIRE(dls_result_proc_chunk(r, i, &pc) == DLS_OK);
    covered += pc.size;
  }
  CHECK(covered == 500);
  CHECK(dls_result_sched_events_proc(r) == dls_result_proc_chunk_count(r));
  CHECK(dls_result_sched_events_thread(r) == dls_result_thread_chunk_count(r));

  dls_imbalance imb;
  REQUIRE(dls_result_imbalance(r, &imb) == DLS_OK);
  CHECK(imb.mean_max > 0.0);
  CHECK(imb.mean_max <= 1.0);

  dls_trace* tr = nullptr;
  REQUIRE(dls_result_trace(r, &tr) == DLS_OK);
  CHECK(dls_trace_validate(tr) == DLS_OK);
  dls_wait_totals waits;
  REQUIRE(dls_trace_wait_totals(tr, &waits) == DLS_OK);
  CHECK(waits.total_process_idle >= 0.0);

  auto path = temp_path("trace.csv");
  REQUIRE(dls_trace_export(tr, path.c_str(), DLS_TRACE_CSV) == DLS_OK);
  dls_trace* back = nullptr;
  REQUIRE(dls_trace_import(path.c_str(), &back) == DLS_OK);
  CHECK(dls_trace_size(back) == dls_trace_size(tr));
  dls_trace_event ev;
  REQUIRE(dls_trace_event_at(back, 0, &ev) == DLS_OK);
  CHECK(dls_trace_event_at(back, dls_trace_size(back), &ev) == DLS_E_INVALID_ARGUMENT);
  std::filesystem::remove(path);

  dls_trace_destroy(back);
  dls_trace_destroy(tr);
  dls_result_destroy(r);
  dls_runtime_destroy(rt);
}

TEST_CASE("failing task aborts with a partial result") {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  plan.n = 64;
  plan.ranks = 2;
  plan.threads = 2;
  plan.proc_technique = DLS_GSS;
  dls_runtime* rt = nullptr;
  REQUIRE(dls_runtime_create(&plan, &rt) == DLS_OK);
  dls_run_result* r = nullptr;
  CHECK(dls_runtime_run(rt, failing_task, nullptr, &r) == DLS_E_RUNTIME);
  CHECK(std::string(dls_last_error()).find("returned 42") != std::string::npos);
  REQUIRE(r != nullptr);
  dls_trace* tr = nullptr;
  REQUIRE(dls_result_trace(r, &tr) == DLS_OK);
  CHECK(dls_trace_validate(tr) == DLS_OK);
  dls_trace_destroy(tr);
  dls_result_destroy(r);

  // the runtime stays usable
  Counter counter(64);
  REQUIRE(dls_runtime_run(rt, count_task, &counter, &r) == DLS_OK);
  dls_result_destroy(r);
  dls_runtime_destroy(rt);
}

TEST_CASE("invalid plans are setup errors") {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  plan.n = 100;
  plan.ranks = 0;
  dls_runtime* rt = nullptr;
  CHECK(dls_runtime_create(&plan, &rt) == DLS_E_SETUP);
  plan.ranks = 2;
  plan.thread_technique = DLS_NODLB;
  CHECK(dls_runtime_create(&plan, &rt) == DLS_E_SETUP);
  CHECK(rt == nullptr);
}

TEST_CASE("time-steps carry AWF weights") {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  plan.n = 200;
  plan.ranks = 2;
  plan.proc_technique = DLS_AWF;
  dls_runtime* rt = nullptr;
  REQUIRE(dls_runtime_create(&plan, &rt) == DLS_OK);
  Counter counter(200);
  dls_run_result* rs[3] = {};
  REQUIRE(dls_runtime_run_timesteps(rt, count_task, &counter, 3, rs) == DLS_OK);
  for (auto& h : counter.hits) CHECK(h.load() == 3);
  for (uint32_t i = 0; i < 3; ++i) {
    CHECK(dls_result_timestep(rs[i]) == i);
    double w[2];
    CHECK(dls_result_proc_weights(rs[i], w, 2) == 2);
    CHECK(w[0] + w[1] == doctest::Approx(2.0));
    dls_result_destroy(rs[i]);
  }
  CHECK(dls_runtime_run_timesteps(rt, count_task, &counter, 0, rs) == DLS_E_INVALID_ARGUMENT);
  dls_runtime_destroy(rt);
}

TEST_CASE("mandelbrot workload output is schedule independent") {
  dls_mandelbrot_spec spec;
  dls_mandelbrot_spec_init(&spec);
  spec.width = 48;
  spec.height = 32;
  spec.max_iterations = 300;
  std::vector<uint64_t> digests;
  for (auto [proc, thread] : {std::pair{DLS_NODLB, DLS_STATIC}, std::pair{DLS_TSS, DLS_RAND}}) {
    dls_workload* w = nullptr;
    REQUIRE(dls_workload_mandelbrot(&spec, &w) == DLS_OK);
    CHECK(dls_workload_tasks(w) == 48 * 32);
    dls_run_plan plan;
    dls_run_plan_init(&plan);
    plan.n = dls_workload_tasks(w);
    plan.ranks = 2;
    plan.threads = 2;
    plan.proc_technique = proc;
    plan.thread_technique = thread;
    plan.trace = DLS_TRACE_NONE;
    dls_runtime* rt = nullptr;
    REQUIRE(dls_runtime_create(&plan, &rt) == DLS_OK);
    dls_run_result* r = nullptr;
    REQUIRE(dls_runtime_run(rt, dls_workload_task, w, &r) == DLS_OK);
    uint64_t d = 0;
    REQUIRE(dls_workload_output_digest(w, &d) == DLS_OK);
    digests.push_back(d);
    dls_result_destroy(r);
    dls_runtime_destroy(rt);
    dls_workload_destroy(w);
  }
  CHECK(digests[0] == digests[1]);
}

TEST_CASE("spin-image and synthetic workloads") {
  dls_spin_image_spec sspec;
  dls_spin_image_spec_init(&sspec);
  sspec.points = 40;
  dls_workload* w = nullptr;
  REQUIRE(dls_workload_spin_image(&sspec, &w) == DLS_OK);
  CHECK(dls_workload_tasks(w) == 40);
  for (uint64_t i = 0; i < 40; ++i) {
    dls_task_context ctx{i, 0, 0, 0};
    REQUIRE(dls_workload_execute(w, &ctx) == DLS_OK);
  }
  auto path = temp_path("spin.csv");
  REQUIRE(dls_workload_write_output(w, path.c_str()) == DLS_OK);
  CHECK(std::filesystem::file_size(path) > 0);
  std::filesystem::remove(path);
  dls_task_context bad{40, 0, 0, 0};
  CHECK(dls_workload_execute(w, &bad) == DLS_E_INVALID_ARGUMENT);
  dls_workload_destroy(w);

  sspec.cloud_path = "/nonexistent/cloud.xyz";
  CHECK(dls_workload_spin_image(&sspec, &w) == DLS_E_IO);

  dls_synthetic_spec syn;
  dls_synthetic_spec_init(&syn);
  REQUIRE(dls_distribution_parse("hotspot", &syn.distribution) == DLS_OK);
  syn.base_us = 1.0;
  syn.param_a = 0.1;
  syn.param_b = 5.0;
  REQUIRE(dls_workload_synthetic(&syn, 100, &w) == DLS_OK);
  uint64_t d;
  CHECK(dls_workload_output_digest(w, &d) == DLS_E_INVALID_ARGUMENT);
  dls_workload_destroy(w);
  syn.param_a = 2.0;
  CHECK(dls_workload_synthetic(&syn, 100, &w) == DLS_E_INVALID_ARGUMENT);
  CHECK(dls_distribution_parse("pareto", &syn.distribution) == DLS_E_INVALID_ARGUMENT);
}
