#pragma once

#include <vector>

#include "core/scheduler.hpp"
#include "oracle/reference_schedules.hpp"

namespace testing_support {

/// Drives `s` round-robin over its PEs until every PE has been told
/// Exhausted, reporting each chunk immediately with the driver's timings.
inline std::vector<dls::ChunkAssignment> drive_round_robin(dls::Scheduler& s,
                                                           const oracle::RefDriver& drv) {
  std::vector<dls::ChunkAssignment> out;
  std::vector<bool> done(s.pes(), false);
  std::uint32_t active = s.pes();
  std::uint32_t pe = 0;
  while (active > 0) {
    if (!done[pe]) {
      auto c = s.next_chunk(pe);
      if (!c) {
        done[pe] = true;
        --active;
      } else {
        out.push_back(*c);
        s.report_completion(*c, static_cast<double>(c->size) * drv.tau[pe], drv.sched[pe]);
      }
    }
    pe = (pe + 1) % s.pes();
  }
  return out;
}

inline oracle::RefDriver make_driver(std::uint32_t p, std::uint64_t seed = 7) {
  oracle::RefDriver drv;
  drv.seed = seed;
  drv.fsc_h = 2e-6;
  drv.fsc_sigma = 5e-6;
  for (std::uint32_t i = 0; i < p; ++i) {
    // heterogeneous, non-dyadic speeds so the adaptive paths move
    drv.tau.push_back(1e-6 * (1.0 + 0.37 * (i % 5)));
    drv.sched.push_back(3e-7 * (1 + i % 3));
  }
  return drv;
}

inline dls::SchedulerOptions options_for(const oracle::RefDriver& drv) {
  dls::SchedulerOptions o;
  o.min_chunk = drv.min_chunk;
  o.seed = drv.seed;
  o.fsc = dls::FscParams{drv.fsc_h, drv.fsc_sigma};
  return o;
}

}  // namespace testing_support
