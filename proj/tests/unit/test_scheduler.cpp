#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "core/scheduler.hpp"
#include "support/drive.hpp"

using namespace dls;
using testing_support::drive_round_robin;
using testing_support::make_driver;
using testing_support::options_for;

namespace {

std::vector<std::uint64_t> sizes_single_requester(Scheduler& s, std::uint32_t pe = 0) {
  std::vector<std::uint64_t> out;
  while (auto c = s.next_chunk(pe)) out.push_back(c->size);
  return out;
}

double weight_sum(std::span<const double> w) { return std::accumulate(w.begin(), w.end(), 0.0); }

}  // namespace

TEST_CASE("create_scheduler initial state") {
  Scheduler s(Technique::gss, 100, 4);
  CHECK(s.remaining() == 100);
  CHECK(s.total() == 100);
  CHECK(std::vector<double>(s.weights().begin(), s.weights().end()) ==
        std::vector<double>{1, 1, 1, 1});

  SchedulerOptions wf;
  wf.initial_weights = {1.5, 0.5};
  Scheduler w(Technique::wf, 10, 2, wf);
  CHECK(weight_sum(w.weights()) == doctest::Approx(2.0));
}

TEST_CASE("create_scheduler errors") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::runtime_failure;
  };
  CHECK(code_of([] { Scheduler(Technique::gss, 0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { Scheduler(Technique::gss, 10, 0); }) == Errc::invalid_argument);
  CHECK(code_of([] { Scheduler(Technique::fsc, 100, 4); }) == Errc::missing_parameter);
  CHECK(code_of([] {
          SchedulerOptions o;
          o.initial_weights = {1.0, 2.0};
          Scheduler(Technique::wf, 10, 2, o);
        }) == Errc::invalid_argument);
  CHECK(code_of([] {
          SchedulerOptions o;
          o.initial_weights = {2.0, 0.0};
          Scheduler(Technique::wf, 10, 2, o);
        }) == Errc::invalid_argument);
  CHECK(code_of([] {
          Scheduler s(Technique::ss, 10, 2);
          s.next_chunk(2);
        }) == Errc::invalid_argument);
}

TEST_CASE("GSS exact sequence") {
  Scheduler s(Technique::gss, 100, 4);
  CHECK(sizes_single_requester(s) ==
        std::vector<std::uint64_t>{25, 19, 14, 11, 8, 6, 5, 3, 3, 2, 1, 1, 1, 1});
}

TEST_CASE("SS hands out single iterations then Exhausted") {
  Scheduler s(Technique::ss, 3, 2);
  CHECK(s.next_chunk(0)->size == 1);
  CHECK(s.next_chunk(1)->size == 1);
  CHECK(s.next_chunk(0)->size == 1);
  CHECK_FALSE(s.next_chunk(1).has_value());
  CHECK(s.exhausted());
}

TEST_CASE("STATIC blocks are truncated to the remainder") {
  Scheduler s(Technique::static_block, 10, 4);
  std::vector<std::uint64_t> sizes, starts;
  for (std::uint32_t p = 0; p < 4; ++p) {
    auto c = s.next_chunk(p);
    REQUIRE(c);
    sizes.push_back(c->size);
    starts.push_back(c->start);
  }
  CHECK(sizes == std::vector<std::uint64_t>{3, 3, 3, 1});
  CHECK(starts == std::vector<std::uint64_t>{0, 3, 6, 9});
  CHECK_FALSE(s.next_chunk(0).has_value());
}

TEST_CASE("STATIC gives each PE exactly its own block") {
  Scheduler s(Technique::static_block, 10, 4);
  auto c2 = s.next_chunk(2);
  REQUIRE(c2);
  CHECK(c2->start == 6);
  CHECK_FALSE(s.next_chunk(2).has_value());  // second request from the same PE
  CHECK(s.remaining() == 7);

  Scheduler tiny(Technique::nodlb, 3, 8);
  CHECK(tiny.next_chunk(2)->size == 1);
  CHECK_FALSE(tiny.next_chunk(5).has_value());  // empty block
}

TEST_CASE("RAND sizes stay within bounds") {
  Scheduler s(Technique::rand, 10000, 4, SchedulerOptions{.min_chunk = 1, .seed = 3});
  std::uint64_t before = s.remaining();
  while (auto c = s.next_chunk(0)) {
    if (c->size < before) {  // not the truncated final chunk
      CHECK(c->size >= 25);
      CHECK(c->size <= 1250);
    }
    before = s.remaining();
  }
}

TEST_CASE("TSS decreases linearly") {
  // N=1000, P=4: first 125, count ceil(2000/126) = 16, step floor(124/15) = 8
  Scheduler s(Technique::tss, 1000, 4);
  auto sizes = sizes_single_requester(s);
  REQUIRE(sizes.size() >= 3);
  CHECK(sizes[0] == 125);
  CHECK(sizes[1] == 117);
  CHECK(sizes[2] == 109);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), 0ULL) == 1000);
}

TEST_CASE("FAC batches are split evenly") {
  // batch 50 -> chunks of 13,13,13,11; then batch 25 -> 7,7,7,4
  Scheduler s(Technique::fac, 100, 4);
  auto sizes = sizes_single_requester(s);
  CHECK(std::vector<std::uint64_t>(sizes.begin(), sizes.begin() + 8) ==
        std::vector<std::uint64_t>{13, 13, 13, 11, 7, 7, 7, 4});
}

TEST_CASE("mFSC and the process-level minimum chunk") {
  CHECK(mfsc_chunk_size(1'000'000, 12) == 5098);
  CHECK(default_proc_min_chunk(1'000'000, 12) == 2549);
  CHECK(default_proc_min_chunk(768 * 768, 40) == 532);
  CHECK(default_proc_min_chunk(800'000, 40) == 700);
  CHECK(mfsc_chunk_size(3, 4) == 1);
}

TEST_CASE("FSC fixed chunk") {
  CHECK(fsc_chunk_size(100, 1, {1e-3, 1e-3}) == 50);
  // sqrt(2)*1e4*1e-5/(1e-4*4*sqrt(ln 4)) = 299.9..., ^(2/3) = 44.8 -> 45
  CHECK(fsc_chunk_size(10000, 4, {1e-5, 1e-4}) == 45);
  CHECK_THROWS_AS(fsc_chunk_size(10, 2, {1e-5, 0.0}), Error);
}

TEST_CASE("WF chunk is weight-scaled share of the batch") {
  SchedulerOptions o;
  o.initial_weights = {1.5, 0.5};
  Scheduler s(Technique::wf, 100, 2, o);
  // batch 50, share 25: PE0 -> round(37.5) = 38, PE1 -> min(round(12.5)=13, 12 left) = 12
  CHECK(s.next_chunk(0)->size == 38);
  CHECK(s.next_chunk(1)->size == 12);
}

TEST_CASE("conservation over random N, P and every technique") {
  std::mt19937_64 gen(12345);
  std::uniform_int_distribution<std::uint64_t> pick_n(1, 100000);
  std::uniform_int_distribution<std::uint32_t> pick_p(1, 64);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint64_t n = trial < 5 ? trial + 1 : pick_n(gen);
    const std::uint32_t p = pick_p(gen);
    auto drv = make_driver(p, trial);
    drv.min_chunk = 1 + trial % 4;
    for (Technique t : kAllTechniques) {
      Scheduler s(t, n, p, options_for(drv));
      auto chunks = drive_round_robin(s, drv);
      std::sort(chunks.begin(), chunks.end(),
                [](const auto& a, const auto& b) { return a.start < b.start; });
      std::uint64_t cursor = 0;
      bool ok = true;
      for (const auto& c : chunks) {
        ok = ok && c.size >= 1 && c.start == cursor;
        cursor += c.size;
      }
      INFO(technique_name(t), " N=", n, " P=", p);
      CHECK(ok);
      CHECK(cursor == n);
      CHECK(s.remaining() == 0);
      std::uint64_t done = 0;
      for (const auto& rec : s.stats()) done += rec.iterations_done;
      CHECK(done == n);
    }
  }
}

TEST_CASE("min_chunk is respected") {
  for (Technique t : kAllTechniques) {
    if (is_static_split(t)) continue;
    auto drv = make_driver(5);
    drv.min_chunk = 17;
    Scheduler s(t, 5000, 5, options_for(drv));
    std::uint32_t pe = 0;
    while (true) {
      const std::uint64_t before = s.remaining();
      auto c = s.next_chunk(pe);
      if (!c) break;
      INFO(technique_name(t));
      CHECK(c->size >= std::min<std::uint64_t>(17, before));
      s.report_completion(*c, 1e-6 * c->size * (1 + pe), 1e-7);
      pe = (pe + 1) % 5;
    }
  }
}

TEST_CASE("monotone non-increasing chunk sizes") {
  for (Technique t : {Technique::gss, Technique::tss, Technique::fac, Technique::wf,
                      Technique::awf}) {
    for (std::uint64_t n : {7ULL, 100ULL, 9999ULL, 100000ULL}) {
      Scheduler s(t, n, 6);
      auto sizes = sizes_single_requester(s, 0);
      INFO(technique_name(t), " N=", n);
      CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
    }
  }
}

TEST_CASE("deterministic for identical inputs") {
  for (Technique t : kAllTechniques) {
    auto drv = make_driver(7, 99);
    Scheduler a(t, 54321, 7, options_for(drv));
    Scheduler b(t, 54321, 7, options_for(drv));
    CHECK(drive_round_robin(a, drv) == drive_round_robin(b, drv));
  }
}

TEST_CASE("brute-force equivalence for GSS and FAC up to N=200") {
  for (std::uint64_t n = 1; n <= 200; ++n) {
    for (std::uint32_t p : {1u, 2u, 3u, 4u, 7u}) {
      auto drv = make_driver(p);
      for (const char* name : {"GSS", "FAC"}) {
        Scheduler s(*parse_technique(name), n, p, options_for(drv));
        auto got = drive_round_robin(s, drv);
        auto want = oracle::reference_schedule(name, n, p, drv);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i].pe == want[i].pe);
          CHECK(got[i].start == want[i].start);
          CHECK(got[i].size == want[i].size);
        }
      }
    }
  }
}

TEST_CASE("report_completion contract") {
  Scheduler s(Technique::gss, 50, 2);
  auto c = s.next_chunk(0);
  REQUIRE(c);
  s.report_completion(*c, 0.1, 0.01);
  CHECK(s.stats()[0].iterations_done == c->size);
  CHECK(s.stats()[0].per_chunk_samples.size() == 1);
  CHECK(s.stats()[0].mean_iteration_time() == doctest::Approx(0.1 / c->size));

  SUBCASE("double report") {
    CHECK_THROWS_WITH_AS(s.report_completion(*c, 0.1, 0.0), doctest::Contains("unknown"), Error);
    try {
      s.report_completion(*c, 0.1, 0.0);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::protocol_violation);
    }
  }
  SUBCASE("never issued") {
    ChunkAssignment bogus{1, 40, 3, 0, 0};
    CHECK_THROWS_AS(s.report_completion(bogus, 0.1, 0.0), Error);
  }
  SUBCASE("wrong PE") {
    auto d = s.next_chunk(1);
    ChunkAssignment forged = *d;
    forged.pe = 0;
    CHECK_THROWS_AS(s.report_completion(forged, 0.1, 0.0), Error);
  }
}

TEST_CASE("AWF-C rewards the faster PE") {
  // PE0 needs 2 us per iteration, PE1 1 us.
  Scheduler s(Technique::awf_c, 1000, 2);
  for (std::uint32_t pe : {0u, 1u}) {
    auto c = s.next_chunk(pe);
    s.report_completion(*c, (pe == 0 ? 2e-6 : 1e-6) * c->size, 0.0);
  }
  CHECK(s.weights()[1] > s.weights()[0]);
  CHECK(s.weights()[1] == doctest::Approx(4.0 / 3.0));
  CHECK(weight_sum(s.weights()) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("AWF-B learns only when a batch completes") {
  Scheduler s(Technique::awf_b, 1000, 2);
  auto a = s.next_chunk(0);  // batch 0 has 500 iterations, 250 each
  auto b = s.next_chunk(1);
  REQUIRE(a->batch_id == b->batch_id);
  s.report_completion(*a, 2e-6 * a->size, 0.0);
  CHECK(s.weights()[0] == 1.0);  // batch still has an outstanding chunk
  s.report_completion(*b, 1e-6 * b->size, 0.0);
  CHECK(s.weights()[1] == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("AWF-D and AWF-E count scheduling time") {
  for (Technique t : {Technique::awf_d, Technique::awf_e, Technique::awf_b, Technique::awf_c}) {
    Scheduler s(t, 1000, 2);
    auto a = s.next_chunk(0);
    auto b = s.next_chunk(1);
    // identical exec, PE0 pays heavy scheduling overhead
    s.report_completion(*a, 1e-6 * a->size, 1e-3);
    s.report_completion(*b, 1e-6 * b->size, 0.0);
    INFO(technique_name(t));
    if (t == Technique::awf_d || t == Technique::awf_e)
      CHECK(s.weights()[1] > s.weights()[0]);
    else
      CHECK(s.weights()[1] == doctest::Approx(s.weights()[0]));
  }
}

TEST_CASE("AF adapts to per-PE speed") {
  Scheduler s(Technique::af, 100000, 2);
  // two samples each; PE1 twice as fast
  for (int round = 0; round < 2; ++round)
    for (std::uint32_t pe : {0u, 1u}) {
      auto c = s.next_chunk(pe);
      s.report_completion(*c, (pe == 0 ? 2e-6 : 1e-6) * c->size * (1.0 + 0.01 * round), 0.0);
    }
  auto slow = s.next_chunk(0);
  auto fast = s.next_chunk(1);
  CHECK(fast->size > slow->size);
}

TEST_CASE("update_weights_timestep") {
  SUBCASE("symmetric times give unit weights") {
    Scheduler s(Technique::awf, 64, 4);
    for (std::uint32_t pe = 0; pe < 4; ++pe) {
      auto c = s.next_chunk(pe);
      s.report_completion(*c, 0x1.0p-20 * c->size, 0.0);
    }
    auto w = s.update_weights_timestep(0);
    for (double x : w) CHECK(x == 1.0);
  }
  SUBCASE("inverse-time weighting") {
    Scheduler s(Technique::awf, 100, 2);
    auto a = s.next_chunk(0);
    auto b = s.next_chunk(1);
    REQUIRE(a->size == b->size);
    s.report_completion(*a, 1e-3 * a->size, 0.0);
    s.report_completion(*b, 2e-3 * b->size, 0.0);
    auto w = s.update_weights_timestep(0);
    CHECK(w[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.stats()[0].timestep_wap.size() == 1);
  }
  SUBCASE("later time-steps weigh more") {
    Scheduler s(Technique::awf, 1000, 2);
    auto a = s.next_chunk(0);
    auto b = s.next_chunk(1);
    s.report_completion(*a, 1e-6 * a->size, 0.0);
    s.report_completion(*b, 2e-6 * b->size, 0.0);
    s.update_weights_timestep(0);
    a = s.next_chunk(0);
    b = s.next_chunk(1);
    s.report_completion(*a, 2e-6 * a->size, 0.0);
    s.report_completion(*b, 1e-6 * b->size, 0.0);
    auto w = s.update_weights_timestep(1);
    // wap0 = (1*1 + 2*2)/3 = 5/3, wap1 = (1*2 + 2*1)/3 = 4/3
    CHECK(w[1] > w[0]);
    CHECK(w[0] == doctest::Approx(2.0 * (3.0 / 5.0) / (3.0 / 5.0 + 3.0 / 4.0)));
  }
  SUBCASE("AWF-D includes scheduling time") {
    Scheduler s(Technique::awf_d, 100, 2);
    auto a = s.next_chunk(0);
    auto b = s.next_chunk(1);
    s.report_completion(*a, 1e-3 * a->size, 0.0);
    s.report_completion(*b, 1e-3 * b->size, 1e-3 * b->size);
    auto w = s.update_weights_timestep(0);
    CHECK(w[0] == doctest::Approx(4.0 / 3.0));
  }
  SUBCASE("rejected for non-AWF techniques or without data") {
    Scheduler gss(Technique::gss, 100, 2);
    CHECK_THROWS_AS(gss.update_weights_timestep(0), Error);
    Scheduler af(Technique::af, 100, 2);
    CHECK_THROWS_AS(af.update_weights_timestep(0), Error);
    Scheduler empty(Technique::awf, 100, 2);
    CHECK_THROWS_AS(empty.update_weights_timestep(0), Error);
  }
}

TEST_CASE("weights stay normalized under random updates") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> speed(0.1, 10.0);
  for (Technique t : {Technique::awf_b, Technique::awf_c, Technique::awf_d, Technique::awf_e}) {
    for (std::uint32_t p : {2u, 5u, 13u, 64u}) {
      Scheduler s(t, 200000, p);
      std::uint32_t pe = 0;
      while (auto c = s.next_chunk(pe)) {
        s.report_completion(*c, speed(gen) * 1e-6 * c->size, speed(gen) * 1e-7);
        double sum = weight_sum(s.weights());
        CHECK(std::abs(sum - p) <= 1e-9 * p);
        for (double w : s.weights()) CHECK(w > 0.0);
        pe = (pe + 1) % p;
      }
    }
  }
}

TEST_CASE("argmax fairness after one update round") {
  for (Technique t : {Technique::awf_b, Technique::awf_c, Technique::awf_d, Technique::awf_e}) {
    for (double ratio : {1.1, 2.0, 5.0}) {
      Scheduler s(t, 10000, 2);
      auto a = s.next_chunk(0);
      auto b = s.next_chunk(1);
      s.report_completion(*a, ratio * 1e-6 * a->size, 0.0);  // PE0 slower
      s.report_completion(*b, 1e-6 * b->size, 0.0);
      CHECK(s.weights()[1] > s.weights()[0]);
    }
  }
}

TEST_CASE("carry_weights") {
  SUBCASE("copies learned weights") {
    Scheduler prev(Technique::awf_c, 1000, 2);
    auto a = prev.next_chunk(0);
    auto b = prev.next_chunk(1);
    prev.report_completion(*a, 2e-6 * a->size, 0.0);
    prev.report_completion(*b, 3e-6 * b->size, 0.0);
    Scheduler next(Technique::awf_c, 1000, 2);
    carry_weights(prev, next);
    CHECK(next.weights()[0] == prev.weights()[0]);
    CHECK(next.weights()[1] == prev.weights()[1]);
    CHECK(weight_sum(next.weights()) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(next.weights()[0] == doctest::Approx(1.2));
  }
  SUBCASE("cold start is all ones") {
    Scheduler prev(Technique::awf, 10, 3);
    Scheduler next(Technique::awf, 10, 3);
    carry_weights(prev, next);
    for (double w : next.weights()) CHECK(w == 1.0);
  }
  SUBCASE("history survives for multi-step averaging") {
    Scheduler s1(Technique::awf, 100, 2);
    auto a = s1.next_chunk(0);
    auto b = s1.next_chunk(1);
    s1.report_completion(*a, 1e-3 * a->size, 0.0);
    s1.report_completion(*b, 2e-3 * b->size, 0.0);
    s1.update_weights_timestep(0);
    Scheduler s2(Technique::awf, 100, 2);
    carry_weights(s1, s2);
    a = s2.next_chunk(0);
    b = s2.next_chunk(1);
    s2.report_completion(*a, 2e-3 * a->size, 0.0);
    s2.report_completion(*b, 1e-3 * b->size, 0.0);
    auto w = s2.update_weights_timestep(1);
    CHECK(w[1] > w[0]);
    CHECK(s2.stats()[0].timestep_wap.size() == 2);
  }
  SUBCASE("mismatches are rejected") {
    Scheduler a(Technique::awf_b, 10, 2);
    Scheduler b(Technique::awf_b, 10, 3);
    CHECK_THROWS_AS(carry_weights(a, b), Error);
    Scheduler c(Technique::gss, 10, 2);
    Scheduler d(Technique::gss, 10, 2);
    CHECK_THROWS_AS(carry_weights(c, d), Error);
  }
}
