#include "runtime/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <latch>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "core/rng.hpp"
#include "runtime/dispenser.hpp"

namespace dls::runtime {

using metrics::TraceEvent;
using metrics::TraceKind;
using metrics::TraceLevel;

std::string_view trace_detail_name(TraceDetail d) noexcept {
  switch (d) {
    case TraceDetail::none: return "none";
    case TraceDetail::process: return "process";
    case TraceDetail::all: return "all";
  }
  return "?";
}

std::optional<TraceDetail> parse_trace_detail(std::string_view s) noexcept {
  for (auto d : {TraceDetail::none, TraceDetail::process, TraceDetail::all})
    if (trace_detail_name(d) == s) return d;
  return std::nullopt;
}

ThreadSchedule parse_thread_schedule(std::string_view value) {
  ThreadSchedule out;
  const auto comma = value.find(',');
  const std::string_view name = value.substr(0, comma);
  auto t = parse_technique(name);
  if (!t || *t == Technique::nodlb)
    throw Error(Errc::setup_error, std::string(kThreadScheduleEnv) + ": unknown thread technique '" +
                                       std::string(name) + "' (valid: " + valid_technique_names() + ")");
  out.technique = *t;
  if (comma != std::string_view::npos) {
    const std::string digits(value.substr(comma + 1));
    char* end = nullptr;
    const unsigned long long v = std::strtoull(digits.c_str(), &end, 10);
    if (digits.empty() || *end != '\0' || v == 0)
      throw Error(Errc::setup_error, std::string(kThreadScheduleEnv) + ": bad minimum chunk '" + digits + "'");
    out.min_chunk = v;
  }
  return out;
}

RunPlan resolve_plan(RunPlan plan) {
  if (plan.ranks == 0) throw Error(Errc::setup_error, "plan needs at least one rank (P=0)");
  if (plan.threads == 0) throw Error(Errc::setup_error, "plan needs at least one thread per rank (T=0)");
  if (plan.n == 0) throw Error(Errc::setup_error, "plan has an empty loop (N=0)");
  if (plan.timesteps == 0) throw Error(Errc::setup_error, "plan needs at least one time-step");

  if (!plan.thread_technique) {
    ThreadSchedule env;
    if (const char* v = std::getenv(kThreadScheduleEnv); v && *v) env = parse_thread_schedule(v);
    plan.thread_technique = env.technique;
    if (!plan.thread_min_chunk) plan.thread_min_chunk = env.min_chunk;
  }
  if (*plan.thread_technique == Technique::nodlb)
    throw Error(Errc::setup_error, "NODLB is a process-level split; use STATIC at the thread level");
  if (!plan.thread_min_chunk) plan.thread_min_chunk = 1;
  if (*plan.thread_min_chunk == 0) throw Error(Errc::setup_error, "thread minimum chunk must be at least 1");

  if (!plan.proc_min_chunk)
    plan.proc_min_chunk = std::max(default_proc_min_chunk(plan.n, plan.ranks), *plan.thread_min_chunk);
  if (*plan.proc_min_chunk < *plan.thread_min_chunk)
    throw Error(Errc::setup_error, "process minimum chunk " + std::to_string(*plan.proc_min_chunk) +
                                       " is below the thread minimum chunk " +
                                       std::to_string(*plan.thread_min_chunk));

  // Trial construction surfaces missing FSC parameters and bad weights now
  // rather than mid-run.
  try {
    Scheduler proc_trial(plan.proc_technique, plan.n, plan.ranks,
                         {*plan.proc_min_chunk, plan.seed, plan.proc_fsc, plan.proc_weights});
    Scheduler thread_trial(*plan.thread_technique, plan.n, plan.threads,
                           {*plan.thread_min_chunk, plan.seed, plan.thread_fsc, {}});
  } catch (const Error& e) {
    if (e.code() == Errc::missing_parameter) throw;
    throw Error(Errc::setup_error, std::string("invalid plan: ") + e.what());
  }
  return plan;
}

namespace {

using Clock = std::chrono::steady_clock;

struct ThreadLog {
  std::vector<TraceEvent> trace;
  std::vector<ThreadChunkRecord> chunks;
  double finish = 0.0;
};

struct RankLog {
  double finish = 0.0;
  double sched = 0.0;
  std::uint64_t iterations = 0;
};

struct Team {
  explicit Team(std::uint32_t threads) : barrier(threads) {}
  std::barrier<> barrier;
  bool stop = false;
  std::optional<ThreadDispenser> dispenser;
};

struct StepState {
  Clock::time_point t0;
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::optional<std::pair<Errc, std::string>> error;

  double now() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

}  // namespace

// Everything one step needs, so the thread bodies stay readable.
struct StepRun {
  const RunPlan& plan;
  Transport& transport;
  const TaskFn& task;
  std::uint32_t timestep;
  Scheduler& master;
  StepState st;
  std::vector<ThreadLog> logs;
  std::vector<RankLog> ranks;
  std::vector<std::unique_ptr<Team>> teams;
  std::vector<ProcChunkRecord> proc_log;

  StepRun(const RunPlan& p, Transport& tr, const TaskFn& fn, std::uint32_t step, Scheduler& m)
      : plan(p), transport(tr), task(fn), timestep(step), master(m),
        logs(std::size_t{p.ranks} * p.threads), ranks(p.ranks) {
    for (std::uint32_t r = 0; r < p.ranks; ++r) teams.push_back(std::make_unique<Team>(p.threads));
  }

  void fail(Errc code, const std::string& what) {
    {
      std::lock_guard lock(st.err_mu);
      if (!st.error) st.error.emplace(code, what);
    }
    st.abort = true;
    transport.close();
  }

  void master_loop();
  void worker_loop(std::uint32_t rank, std::uint32_t thread);
};

void StepRun::master_loop() {
  const std::uint32_t P = plan.ranks;
  std::vector<char> terminated(P, 0), parked(P, 0), busy(P, 0);
  std::unordered_map<std::uint64_t, std::pair<ChunkAssignment, std::size_t>> issued;
  std::uint32_t live = P;

  std::vector<std::deque<Message>> inbox(plan.serialize_requests ? P : 0);
  std::uint32_t turn = 0;
  auto eligible = [&](std::uint32_t r) { return !terminated[r] && !parked[r]; };
  auto advance_turn = [&] {
    for (std::uint32_t k = 1; k <= P; ++k) {
      const std::uint32_t r = (turn + k) % P;
      if (eligible(r)) {
        turn = r;
        return;
      }
    }
  };

  auto next_message = [&]() -> std::optional<Message> {
    if (!plan.serialize_requests) return transport.recv_at_master();
    if (!eligible(turn))
      throw Error(Errc::runtime_failure, "serialized master has no rank to serve");
    while (inbox[turn].empty()) {
      auto m = transport.recv_at_master();
      if (!m) return std::nullopt;
      if (m->rank >= P) throw Error(Errc::protocol_violation, "message from unknown rank " + std::to_string(m->rank));
      inbox[m->rank].push_back(*m);
    }
    Message m = inbox[turn].front();
    inbox[turn].pop_front();
    return m;
  };

  while (live > 0) {
    auto msg = next_message();
    if (!msg) return;  // transport closed by an abort elsewhere
    const std::uint32_t r = msg->rank;
    if (r >= P) throw Error(Errc::protocol_violation, "message from unknown rank " + std::to_string(r));

    switch (msg->kind) {
      case MessageKind::completion_report: {
        auto it = issued.find(msg->start);
        if (it == issued.end() || it->second.first.pe != r || it->second.first.size != msg->size)
          throw Error(Errc::protocol_violation,
                      "unmatched CompletionReport from rank " + std::to_string(r) + " for [" +
                          std::to_string(msg->start) + ", " + std::to_string(msg->start + msg->size) + ")");
        master.report_completion(it->second.first, msg->exec_time, msg->sched_time);
        proc_log[it->second.second].exec_time = msg->exec_time;
        proc_log[it->second.second].sched_time = msg->sched_time;
        issued.erase(it);
        busy[r] = 0;
        break;
      }
      case MessageKind::work_request: {
        if (terminated[r] || parked[r] || busy[r])
          throw Error(Errc::protocol_violation,
                      "rank " + std::to_string(r) + " sent WorkRequest while not idle");
        if (auto a = master.next_chunk(r)) {
          issued.emplace(a->start, std::make_pair(*a, proc_log.size()));
          proc_log.push_back({r, a->start, a->size, a->round, 0.0, 0.0});
          busy[r] = 1;
          if (!transport.send_to_rank(r, {MessageKind::work_assignment, r, a->start, a->size, 0.0, 0.0})) {
            if (!st.abort) throw Error(Errc::runtime_failure, "master: send to rank " + std::to_string(r) + " failed");
            return;
          }
        } else {
          parked[r] = 1;
        }
        if (plan.serialize_requests) advance_turn();
        break;
      }
      default:
        throw Error(Errc::protocol_violation, "master received " +
                                                  std::string(message_kind_name(msg->kind)) +
                                                  " from rank " + std::to_string(r));
    }

    if (master.exhausted() && master.outstanding() == 0) {
      for (std::uint32_t q = 0; q < P; ++q) {
        if (!parked[q]) continue;
        parked[q] = 0;
        terminated[q] = 1;
        --live;
        if (!transport.send_to_rank(q, {MessageKind::terminate, q, 0, 0, 0.0, 0.0}) && !st.abort)
          throw Error(Errc::runtime_failure, "master: send to rank " + std::to_string(q) + " failed");
      }
      if (plan.serialize_requests && live > 0 && !eligible(turn)) advance_turn();
    }
  }
}

void StepRun::worker_loop(std::uint32_t rank, std::uint32_t thread) {
  Team& team = *teams[rank];
  ThreadLog& log = logs[std::size_t{rank} * plan.threads + thread];
  RankLog& rl = ranks[rank];
  const bool leader = thread == 0;
  const bool trace_proc = plan.trace != TraceDetail::none;
  const bool trace_thread = plan.trace == TraceDetail::all;
  auto proc_event = [&](TraceKind kind, double t, std::optional<std::uint64_t> s = {},
                        std::optional<std::uint64_t> n = {}) {
    if (trace_proc) log.trace.push_back({TraceLevel::process, rank, std::nullopt, kind, t, s, n});
  };
  auto thread_event = [&](TraceKind kind, double t, std::optional<std::uint64_t> s = {},
                          std::optional<std::uint64_t> n = {}) {
    if (trace_thread) log.trace.push_back({TraceLevel::thread, rank, thread, kind, t, s, n});
  };

  std::optional<Message> pending_report;
  double t_got = 0.0, cur_sched = 0.0;
  std::uint64_t cur_start = 0, cur_size = 0;
  if (leader) proc_event(TraceKind::timestep_start, st.now());

  while (true) {
    if (leader) {
      team.stop = true;
      team.dispenser.reset();
      try {
        if (!st.abort && (!pending_report || transport.send_to_master(*pending_report))) {
          pending_report.reset();
          const double t_req = st.now();
          proc_event(TraceKind::wait_start, t_req);
          std::optional<Message> reply;
          if (transport.send_to_master({MessageKind::work_request, rank, 0, 0, 0.0, 0.0}))
            reply = transport.recv_at_rank(rank);
          t_got = std::max(st.now(), t_req);
          proc_event(TraceKind::wait_end, t_got);
          rl.sched += t_got - t_req;
          if (reply && reply->kind == MessageKind::work_assignment && reply->rank == rank &&
              reply->size > 0) {
            cur_sched = t_got - t_req;
            cur_start = reply->start;
            cur_size = reply->size;
            const std::uint64_t tseed =
                splitmix64(plan.seed ^ (std::uint64_t{rank} << 40) ^ (std::uint64_t{timestep} << 20) ^ cur_start);
            team.dispenser.emplace(*plan.thread_technique, cur_start, cur_size, plan.threads,
                                   SchedulerOptions{*plan.thread_min_chunk, tseed, plan.thread_fsc, {}});
            proc_event(TraceKind::chunk_start, t_got, cur_start, cur_size);
            team.stop = false;
          } else if (reply && reply->kind != MessageKind::terminate) {
            fail(Errc::protocol_violation, "rank " + std::to_string(rank) + " received unexpected " +
                                               std::string(message_kind_name(reply->kind)));
          }
        }
      } catch (const Error& e) {
        fail(e.code(), "rank " + std::to_string(rank) + ": " + e.what());
      }
    }
    team.barrier.arrive_and_wait();
    if (team.stop) break;

    while (!st.abort) {
      auto sub = team.dispenser->next(thread);
      if (!sub) break;
      const double ts = st.now();
      thread_event(TraceKind::chunk_start, ts, sub->start, sub->size);
      bool ok = true;
      try {
        for (std::uint64_t i = sub->start; i < sub->end(); ++i) task({i, rank, thread, timestep});
      } catch (const std::exception& e) {
        fail(Errc::runtime_failure, "task failed on rank " + std::to_string(rank) + " thread " +
                                        std::to_string(thread) + ": " + e.what());
        ok = false;
      } catch (...) {
        fail(Errc::runtime_failure, "task failed on rank " + std::to_string(rank) + " thread " +
                                        std::to_string(thread));
        ok = false;
      }
      const double te = std::max(st.now(), ts);
      thread_event(TraceKind::chunk_end, te, sub->start, sub->size);
      if (!ok) break;
      log.chunks.push_back({rank, thread, sub->start, sub->size, team.dispenser->chunk_start(),
                            team.dispenser->chunk_size(), ts, te});
      log.finish = te;
      try {
        team.dispenser->report(*sub, te - ts);
      } catch (const Error& e) {
        fail(e.code(), e.what());
        break;
      }
    }
    const double tw = st.now();
    thread_event(TraceKind::wait_start, tw);
    team.barrier.arrive_and_wait();
    thread_event(TraceKind::wait_end, std::max(st.now(), tw));

    if (leader) {
      const double t_done = std::max(st.now(), t_got);
      proc_event(TraceKind::chunk_end, t_done, cur_start, cur_size);
      rl.finish = t_done;
      rl.iterations += cur_size;
      pending_report =
          Message{MessageKind::completion_report, rank, cur_start, cur_size, t_done - t_got, cur_sched};
    }
  }
  if (leader) proc_event(TraceKind::timestep_end, st.now());
}

Runtime::Runtime(RunPlan plan) : plan_(resolve_plan(std::move(plan))) { ensure_transport(); }

Runtime::~Runtime() = default;

void Runtime::ensure_transport() {
  if (!transport_ || transport_->closed()) transport_ = make_transport(plan_.transport, plan_.ranks);
}

SchedulerOptions Runtime::proc_options() const {
  return {*plan_.proc_min_chunk, plan_.seed, plan_.proc_fsc, plan_.proc_weights};
}

RunResult Runtime::run_loop(const TaskFn& task) {
  std::unique_ptr<Scheduler> master;
  return run_step(task, 0, nullptr, master);
}

std::vector<RunResult> Runtime::run_timesteps(const TaskFn& task, std::uint32_t timesteps) {
  if (timesteps == 0) throw Error(Errc::invalid_argument, "timesteps must be at least 1");
  std::vector<RunResult> out;
  out.reserve(timesteps);
  std::unique_ptr<Scheduler> previous;
  const bool carry = is_awf_family(plan_.proc_technique);
  for (std::uint32_t step = 0; step < timesteps; ++step) {
    std::unique_ptr<Scheduler> master;
    out.push_back(run_step(task, step, carry ? previous.get() : nullptr, master));
    previous = std::move(master);
  }
  return out;
}

RunResult Runtime::run_step(const TaskFn& task, std::uint32_t timestep, const Scheduler* carry_from,
                            std::unique_ptr<Scheduler>& master_out) {
  if (!task) throw Error(Errc::invalid_argument, "task function is empty");
  ensure_transport();
  auto master = std::make_unique<Scheduler>(plan_.proc_technique, plan_.n, plan_.ranks, proc_options());
  if (carry_from) carry_weights(*carry_from, *master);

  StepRun run(plan_, *transport_, task, timestep, *master);
  std::latch gate(1);
  std::vector<std::thread> threads;
  threads.reserve(std::size_t{plan_.ranks} * plan_.threads + 1);
  threads.emplace_back([&] {
    gate.wait();
    try {
      run.master_loop();
    } catch (const Error& e) {
      run.fail(e.code(), std::string("master: ") + e.what());
    } catch (const std::exception& e) {
      run.fail(Errc::runtime_failure, std::string("master: ") + e.what());
    }
  });
  for (std::uint32_t r = 0; r < plan_.ranks; ++r)
    for (std::uint32_t t = 0; t < plan_.threads; ++t)
      threads.emplace_back([&, r, t] {
        gate.wait();
        run.worker_loop(r, t);
      });

  run.st.t0 = Clock::now();
  gate.count_down();
  for (auto& th : threads) th.join();
  const double wall = run.st.now();

  RunResult result;
  result.timestep = timestep;
  result.wall_time = wall;
  result.rank_finish.resize(plan_.ranks);
  result.rank_sched_time.resize(plan_.ranks);
  result.rank_iterations.resize(plan_.ranks);
  result.thread_finish.assign(plan_.ranks, std::vector<double>(plan_.threads, 0.0));
  for (std::uint32_t r = 0; r < plan_.ranks; ++r) {
    result.rank_finish[r] = run.ranks[r].finish;
    result.rank_sched_time[r] = run.ranks[r].sched;
    result.rank_iterations[r] = run.ranks[r].iterations;
    for (std::uint32_t t = 0; t < plan_.threads; ++t)
      result.thread_finish[r][t] = run.logs[std::size_t{r} * plan_.threads + t].finish;
  }
  result.proc_chunks = std::move(run.proc_log);
  for (auto& log : run.logs) {
    result.thread_chunks.insert(result.thread_chunks.end(), log.chunks.begin(), log.chunks.end());
    result.trace.insert(result.trace.end(), log.trace.begin(), log.trace.end());
  }
  std::stable_sort(result.thread_chunks.begin(), result.thread_chunks.end(),
                   [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
  std::stable_sort(result.trace.begin(), result.trace.end(),
                   [](const auto& a, const auto& b) { return a.t < b.t; });

  if (run.st.error) {
    result.proc_weights.assign(master->weights().begin(), master->weights().end());
    throw RunAborted(run.st.error->first, run.st.error->second, std::move(result));
  }
  if (plan_.proc_technique == Technique::awf) master->update_weights_timestep(timestep);
  result.proc_weights.assign(master->weights().begin(), master->weights().end());
  master_out = std::move(master);
  return result;
}

}  // namespace dls::runtime
