#include "bench/results.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dls/dls.h"

namespace bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json parse_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string());
}

std::string cell_id(const std::string& proc, const std::string& thread) {
  return proc + "__" + thread;
}

json cell_to_json(const CellRecord& c) {
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"repetition", r.repetition},
                    {"wall_time_s", r.wall_time_s},
                    {"cov", r.cov},
                    {"mean_max", r.mean_max},
                    {"sched_events_proc", r.sched_events_proc},
                    {"sched_events_thread", r.sched_events_thread}});
  json j = {{"proc_technique", c.proc},
            {"thread_technique", c.thread},
            {"status", c.ok ? "ok" : "failed"},
            {"error", c.error},
            {"config_digest", c.digest},
            {"oversubscribed", c.oversubscribed},
            {"rows", rows}};
  j["output_digest"] = c.output_digest ? json(*c.output_digest) : json(nullptr);
  return j;
}

CellRecord cell_from_json(const json& j) {
  CellRecord c;
  c.proc = j.at("proc_technique").get<std::string>();
  c.thread = j.at("thread_technique").get<std::string>();
  c.ok = j.at("status").get<std::string>() == "ok";
  c.error = j.value("error", "");
  c.digest = j.at("config_digest").get<std::uint64_t>();
  c.oversubscribed = j.value("oversubscribed", false);
  if (j.contains("output_digest") && !j["output_digest"].is_null())
    c.output_digest = j["output_digest"].get<std::uint64_t>();
  for (const auto& r : j.at("rows"))
    c.rows.push_back(RepRow{r.at("repetition").get<std::uint32_t>(), r.at("wall_time_s").get<double>(),
                            r.at("cov").get<double>(), r.at("mean_max").get<double>(),
                            r.at("sched_events_proc").get<std::uint64_t>(),
                            r.at("sched_events_thread").get<std::uint64_t>()});
  return c;
}

Spread spread(std::vector<double> v) {
  Spread s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.median = q(0.5);
  s.q1 = q(0.25);
  s.q3 = q(0.75);
  s.min = v.front();
  s.max = v.back();
  return s;
}

SweepSummary summarize(const std::vector<CellRecord>& cells, const std::vector<std::string>& proc_order,
                       const std::vector<std::string>& thread_order, std::string measure,
                       bool oversubscribed) {
  SweepSummary s;
  s.measure = std::move(measure);
  s.oversubscribed = oversubscribed;
  s.proc_order = proc_order;
  s.thread_order = thread_order;

  for (const auto& c : cells) {
    s.oversubscribed |= c.oversubscribed;
    if (!c.ok || c.rows.empty()) {
      s.failed.push_back(cell_id(c.proc, c.thread) + (c.error.empty() ? "" : ": " + c.error));
      continue;
    }
    CellStats st;
    st.proc = c.proc;
    st.thread = c.thread;
    st.reps = c.rows.size();
    std::vector<double> times;
    for (const auto& r : c.rows) {
      times.push_back(r.wall_time_s);
      st.mean_cov += r.cov;
      st.mean_mean_max += r.mean_max;
      s.raw.push_back(r);
      s.raw_cell.push_back(s.cells.size());
    }
    st.mean_cov /= static_cast<double>(c.rows.size());
    st.mean_mean_max /= static_cast<double>(c.rows.size());
    st.time = spread(std::move(times));
    if (c.proc == kBaselineProc && c.thread == kBaselineThread) s.baseline = s.cells.size();
    s.cells.push_back(std::move(st));
  }

  if (s.baseline) {
    const double base = s.cells[*s.baseline].time.mean;
    for (auto& c : s.cells) {
      double v;
      if (dls_percent_improvement(base, c.time.mean, &v) == DLS_OK) c.improvement = v;
    }
    s.cells[*s.baseline].improvement = 0.0;  // exact by definition
  }

  auto best = [&](auto pred) -> std::optional<std::size_t> {
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < s.cells.size(); ++i)
      if (pred(s.cells[i]) && (!arg || s.cells[i].time.mean < s.cells[*arg].time.mean)) arg = i;
    return arg;
  };
  auto dyn_proc = [](const CellStats& c) { return c.proc != kBaselineProc; };
  auto dyn_thread = [](const CellStats& c) { return c.thread != kBaselineThread; };
  s.winners = {
      {"baseline", s.baseline},
      {"best_thread_only", best([&](const CellStats& c) { return !dyn_proc(c) && dyn_thread(c); })},
      {"best_proc_only", best([&](const CellStats& c) { return dyn_proc(c) && !dyn_thread(c); })},
      {"best_two_level", best([&](const CellStats& c) { return dyn_proc(c) && dyn_thread(c); })},
      {"best_combination", best([](const CellStats&) { return true; })},
  };
  return s;
}

SweepSummary load_sweep(const fs::path& dir) {
  const json cfg = parse_file(dir / "config.json");
  auto names = [&](const char* key) {
    std::vector<std::string> out;
    for (const auto& v : cfg.at(key)) out.push_back(v.get<std::string>());
    return out;
  };
  std::vector<std::string> procs = names("proc_techniques");
  std::vector<std::string> threads = names("thread_techniques");
  if (std::find(procs.begin(), procs.end(), kBaselineProc) == procs.end())
    procs.insert(procs.begin(), kBaselineProc);
  if (std::find(threads.begin(), threads.end(), kBaselineThread) == threads.end())
    threads.insert(threads.begin(), kBaselineThread);

  std::vector<CellRecord> cells;
  for (const auto& p : procs)
    for (const auto& t : threads) {
      const fs::path f = dir / "cells" / (cell_id(p, t) + ".json");
      if (!fs::exists(f)) continue;
      try {
        cells.push_back(cell_from_json(parse_file(f)));
      } catch (const json::exception& e) {
        throw std::runtime_error(f.string() + ": " + e.what());
      }
    }
  return summarize(cells, procs, threads, cfg.value("measure", "repetitions"), false);
}

json summary_to_json(const SweepSummary& s) {
  json cells = json::array();
  for (const auto& c : s.cells)
    cells.push_back({{"proc_technique", c.proc},
                     {"thread_technique", c.thread},
                     {"repetitions", c.reps},
                     {"mean_s", c.time.mean},
                     {"median_s", c.time.median},
                     {"q1_s", c.time.q1},
                     {"q3_s", c.time.q3},
                     {"min_s", c.time.min},
                     {"max_s", c.time.max},
                     {"mean_cov", c.mean_cov},
                     {"mean_mean_max", c.mean_mean_max},
                     {"improvement_pct", c.improvement ? json(*c.improvement) : json(nullptr)}});
  json winners = json::object();
  for (const auto& w : s.winners) {
    if (!w.cell) {
      winners[w.role] = nullptr;
      continue;
    }
    const auto& c = s.cells[*w.cell];
    winners[w.role] = {{"proc_technique", c.proc},
                       {"thread_technique", c.thread},
                       {"mean_s", c.time.mean},
                       {"improvement_pct", c.improvement ? json(*c.improvement) : json(nullptr)}};
  }
  return {{"measure", s.measure},  {"oversubscribed", s.oversubscribed},
          {"proc_techniques", s.proc_order}, {"thread_techniques", s.thread_order},
          {"cells", cells},        {"failed", s.failed},
          {"winners", winners}};
}

namespace {

const CellStats* find_cell(const SweepSummary& s, const std::string& p, const std::string& t) {
  for (const auto& c : s.cells)
    if (c.proc == p && c.thread == t) return &c;
  return nullptr;
}

std::string winner_csv(const SweepSummary& s, const Winner& w) {
  std::string line = w.role + ",";
  if (!w.cell) return line + ",,,\n";
  const auto& c = s.cells[*w.cell];
  return line + c.proc + "," + c.thread + "," + num(c.time.mean) + "," +
         (c.improvement ? num(*c.improvement) : "") + "\n";
}

}  // namespace

std::vector<fs::path> write_csv_report(const SweepSummary& s, const fs::path& dir) {
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& body) {
    write_file_atomic(dir / name, body);
    written.push_back(dir / name);
  };

  std::string raw =
      "proc_technique,thread_technique,repetition,wall_time_s,cov,mean_max,sched_events_proc,"
      "sched_events_thread\n";
  for (std::size_t i = 0; i < s.raw.size(); ++i) {
    const auto& r = s.raw[i];
    const auto& c = s.cells[s.raw_cell[i]];
    raw += c.proc + "," + c.thread + "," + std::to_string(r.repetition) + "," + num(r.wall_time_s) +
           "," + num(r.cov) + "," + num(r.mean_max) + "," + std::to_string(r.sched_events_proc) +
           "," + std::to_string(r.sched_events_thread) + "\n";
  }
  emit("raw.csv", raw);

  std::string imp = "proc_technique";
  for (const auto& t : s.thread_order) imp += "," + t;
  imp += "\n";
  for (const auto& p : s.proc_order) {
    imp += p;
    for (const auto& t : s.thread_order) {
      imp += ",";
      if (const auto* c = find_cell(s, p, t); c && c->improvement) imp += num(*c->improvement);
    }
    imp += "\n";
  }
  emit("improvement.csv", imp);

  std::string stats =
      "proc_technique,thread_technique,repetitions,mean_s,median_s,q1_s,q3_s,min_s,max_s,mean_cov,"
      "mean_mean_max,improvement_pct\n";
  for (const auto& c : s.cells)
    stats += c.proc + "," + c.thread + "," + std::to_string(c.reps) + "," + num(c.time.mean) + "," +
             num(c.time.median) + "," + num(c.time.q1) + "," + num(c.time.q3) + "," +
             num(c.time.min) + "," + num(c.time.max) + "," + num(c.mean_cov) + "," +
             num(c.mean_mean_max) + "," + (c.improvement ? num(*c.improvement) : "") + "\n";
  emit("stats.csv", stats);

  const std::string header = "role,proc_technique,thread_technique,mean_time_s,improvement_pct\n";
  std::string levels = header;
  std::string summary = header;
  for (const auto& w : s.winners) {
    if (w.role == "best_combination") summary += winner_csv(s, w);
    else levels += winner_csv(s, w);
  }
  emit("summary.csv", summary);
  emit("levels.csv", levels);
  return written;
}

fs::path write_markdown_report(const SweepSummary& s, const fs::path& dir) {
  std::ostringstream md;
  md << "# Sweep report\n\n";
  md << "- measurements: " << s.measure << "\n";
  md << "- cells: " << s.cells.size() << " completed, " << s.failed.size() << " failed\n";
  if (s.oversubscribed) md << "- **oversubscribed**: more workers than logical cores\n";
  md << "- improvement: percent faster than " << kBaselineProc << "_" << kBaselineThread
     << " on mean wall time; positive is better\n\n";

  md << "## Per-level comparison\n\n| role | proc | thread | mean time (s) | improvement (%) |\n"
        "|---|---|---|---:|---:|\n";
  for (const auto& w : s.winners) {
    if (!w.cell) {
      md << "| " << w.role << " | - | - | - | - |\n";
      continue;
    }
    const auto& c = s.cells[*w.cell];
    md << "| " << w.role << " | " << c.proc << " | " << c.thread << " | " << fixed(c.time.mean, 6)
       << " | " << (c.improvement ? fixed(*c.improvement, 2) : "-") << " |\n";
  }

  if (const auto& w = s.winners.back(); w.cell) {
    const auto& c = s.cells[*w.cell];
    md << "\nBest combination: **" << c.proc << "_" << c.thread << "**";
    if (c.improvement) md << " (" << fixed(*c.improvement, 2) << "% vs baseline)";
    md << ".\n";
  }

  auto matrix = [&](const char* title, auto value) {
    md << "\n## " << title << "\n\n| proc \\ thread |";
    for (const auto& t : s.thread_order) md << " " << t << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < s.thread_order.size(); ++i) md << "---:|";
    md << "\n";
    for (const auto& p : s.proc_order) {
      md << "| " << p << " |";
      for (const auto& t : s.thread_order) {
        const auto* c = find_cell(s, p, t);
        md << " " << (c ? value(*c) : std::string("")) << " |";
      }
      md << "\n";
    }
  };
  matrix("Improvement over baseline (%)", [](const CellStats& c) {
    return c.improvement ? fixed(*c.improvement, 2) : std::string("-");
  });
  matrix("Mean wall time (s)", [](const CellStats& c) { return fixed(c.time.mean, 6); });

  md << "\n## Repetition statistics\n\n| proc | thread | n | mean | median | q1 | q3 | min | max | "
        "c.o.v. | mean/max |\n|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& c : s.cells)
    md << "| " << c.proc << " | " << c.thread << " | " << c.reps << " | " << fixed(c.time.mean, 6)
       << " | " << fixed(c.time.median, 6) << " | " << fixed(c.time.q1, 6) << " | "
       << fixed(c.time.q3, 6) << " | " << fixed(c.time.min, 6) << " | " << fixed(c.time.max, 6)
       << " | " << fixed(c.mean_cov, 4) << " | " << fixed(c.mean_mean_max, 4) << " |\n";

  if (!s.failed.empty()) {
    md << "\n## Failed cells\n\n";
    for (const auto& f : s.failed) md << "- " << f << "\n";
  }
  const fs::path out = dir / "report.md";
  write_file_atomic(out, md.str());
  return out;
}

}  // namespace bench
