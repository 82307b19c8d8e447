#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "metrics/trace.hpp"

using namespace dls;
using namespace dls::metrics;

namespace {

TraceEvent proc(std::uint32_t rank, TraceKind kind, double t, std::optional<std::uint64_t> start = {},
                std::optional<std::uint64_t> size = {}) {
  return {TraceLevel::process, rank, std::nullopt, kind, t, start, size};
}

TraceEvent thr(std::uint32_t rank, std::uint32_t thread, TraceKind kind, double t,
               std::optional<std::uint64_t> start = {}, std::optional<std::uint64_t> size = {}) {
  return {TraceLevel::thread, rank, thread, kind, t, start, size};
}

std::vector<TraceEvent> sample_trace() {
  using K = TraceKind;
  return {
      proc(0, K::timestep_start, 0.0),
      proc(0, K::wait_start, 0.0),
      proc(0, K::wait_end, 0.125),
      proc(0, K::chunk_start, 0.125, 0, 50),
      thr(0, 0, K::chunk_start, 0.125, 0, 25),
      thr(0, 1, K::chunk_start, 0.125, 25, 25),
      thr(0, 1, K::chunk_end, 1.5, 25, 25),
      thr(0, 0, K::chunk_end, 2.0, 0, 25),
      proc(0, K::chunk_end, 2.0, 0, 50),
      proc(0, K::timestep_end, 2.0),
      proc(1, K::chunk_start, 0.0, 50, 50),
      thr(1, 0, K::chunk_start, 0.0, 50, 50),
      thr(1, 0, K::chunk_end, 1.0 / 3.0, 50, 50),
      proc(1, K::chunk_end, 1.0 / 3.0, 50, 50),
  };
}

std::size_t error_index(const std::vector<TraceEvent>& t) {
  try {
    validate_trace(t);
  } catch (const TraceError& e) {
    CHECK(e.code() == Errc::trace_error);
    return e.index();
  }
  return SIZE_MAX;
}

}  // namespace

TEST_CASE("trace validation accepts a well-nested trace") {
  auto t = sample_trace();
  CHECK_NOTHROW(validate_trace(t));
}

TEST_CASE("trace validation names the offending event") {
  using K = TraceKind;
  CHECK(error_index({proc(0, K::chunk_end, 1.0, 0, 1)}) == 0);
  CHECK(error_index({proc(0, K::chunk_start, 1.0, 0, 4), proc(0, K::chunk_end, 0.5, 0, 4)}) == 1);
  CHECK(error_index({proc(0, K::chunk_start, 0.0, 0, 4), proc(0, K::chunk_end, 1.0, 0, 3)}) == 1);
  CHECK(error_index({proc(0, K::wait_start, 0.0), proc(0, K::chunk_start, 0.1, 0, 1)}) == 1);
  CHECK(error_index({thr(0, 0, K::chunk_start, 0.0, 0, 1), proc(0, K::wait_end, 0.0)}) == 1);
  // thread-level event lacking thread id
  TraceEvent bad{TraceLevel::thread, 0, std::nullopt, K::wait_start, 0.0, {}, {}};
  CHECK(error_index({bad}) == 0);
  // unterminated region is reported at the end position
  CHECK(error_index({proc(0, K::timestep_start, 0.0), proc(0, K::wait_start, 0.1)}) == 2);
}

TEST_CASE("wait decomposition") {
  auto t = sample_trace();
  auto w = wait_decomposition(t);
  REQUIRE(w.rank_finish.size() == 2);
  CHECK(w.rank_finish[0] == 2.0);
  CHECK(w.rank_finish[1] == 1.0 / 3.0);
  CHECK(w.process_idle[0] == 0.0);
  CHECK(w.process_idle[1] == doctest::Approx(2.0 - 1.0 / 3.0));
  REQUIRE(w.thread_idle[0].size() == 2);
  CHECK(w.thread_idle[0][0] == 0.0);
  CHECK(w.thread_idle[0][1] == 0.5);
  CHECK(w.thread_idle[1][0] == 0.0);
  CHECK(w.total_thread_idle == 0.5);
  CHECK(w.total_process_idle == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("wait decomposition definitions") {
  using K = TraceKind;
  // rank 0 done at 3 s, rank 1 at 4 s
  std::vector<TraceEvent> t{proc(0, K::chunk_start, 0, 0, 1), proc(0, K::chunk_end, 3, 0, 1),
                            proc(1, K::chunk_start, 0, 1, 1), proc(1, K::chunk_end, 4, 1, 1)};
  auto w = wait_decomposition(t);
  CHECK(w.process_idle[0] == 1.0);
  CHECK(w.process_idle[1] == 0.0);

  std::vector<TraceEvent> same;
  for (std::uint32_t th = 0; th < 4; ++th) {
    same.push_back(thr(0, th, K::chunk_start, 0.0, th, 1));
    same.push_back(thr(0, th, K::chunk_end, 2.0, th, 1));
  }
  auto ws = wait_decomposition(same);
  for (double idle : ws.thread_idle[0]) CHECK(idle == 0.0);
  CHECK(ws.rank_finish[0] == 2.0);
}

TEST_CASE("empty trace exports header only") {
  std::ostringstream j, c;
  write_trace(j, {}, TraceFormat::json_lines);
  write_trace(c, {}, TraceFormat::csv);
  const std::string js = j.str();
  CHECK(std::count(js.begin(), js.end(), '\n') == 1);
  CHECK(c.str() == "v,level,rank,thread,kind,t,start,size\n");
  std::istringstream back(j.str());
  CHECK(read_trace(back).empty());
}

TEST_CASE("trace round-trip preserves every field") {
  auto t = sample_trace();
  t.push_back(proc(7, TraceKind::wait_start, 1e-300));
  t.push_back(proc(7, TraceKind::wait_end, 0.1 + 0.2));
  for (auto fmt : {TraceFormat::json_lines, TraceFormat::csv}) {
    std::stringstream ss;
    write_trace(ss, t, fmt);
    auto back = read_trace(ss);
    CHECK(back == t);
  }
}

TEST_CASE("trace export to file and format parsing") {
  auto path = (std::filesystem::temp_directory_path() / "dls_trace_unit.jsonl").string();
  auto t = sample_trace();
  export_trace(path, t, TraceFormat::json_lines);
  CHECK(import_trace(path) == t);
  std::filesystem::remove(path);
  try {
    export_trace("/nonexistent-dir/x.csv", t, TraceFormat::csv);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io_error);
    CHECK(std::string(e.what()).find("/nonexistent-dir/x.csv") != std::string::npos);
  }
  CHECK(parse_trace_format("csv") == TraceFormat::csv);
  CHECK(parse_trace_format("json-lines") == TraceFormat::json_lines);
  CHECK_FALSE(parse_trace_format("xml").has_value());
}

TEST_CASE("malformed trace input reports the record index") {
  std::istringstream in(
      "v,level,rank,thread,kind,t,start,size\n"
      "1,process,0,,wait_start,0,,\n"
      "1,process,0,,bogus,0,,\n");
  try {
    read_trace(in);
    FAIL("expected trace error");
  } catch (const TraceError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("one million events export within budget") {
  std::vector<TraceEvent> t;
  t.reserve(1'000'000);
  for (std::uint32_t i = 0; i < 500'000; ++i) {
    t.push_back(thr(i % 4, i % 8, TraceKind::chunk_start, i * 1e-6, i, 1));
    t.push_back(thr(i % 4, i % 8, TraceKind::chunk_end, i * 1e-6 + 5e-7, i, 1));
  }
  auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out;
  write_trace(out, t, TraceFormat::json_lines);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 5.0);
  CHECK(out.str().size() > 1'000'000u);
}
