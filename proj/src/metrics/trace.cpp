#include "metrics/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace dls::metrics {

namespace {

constexpr std::string_view kCsvHeader = "v,level,rank,thread,kind,t,start,size";

struct OpenState {
  bool in_timestep = false;
  bool in_wait = false;
  bool in_chunk = false;
  std::uint64_t chunk_start = 0;
  std::uint64_t chunk_size = 0;
  double last_t = 0.0;
  bool seen = false;
};

using StreamKey = std::tuple<TraceLevel, std::uint32_t, std::uint32_t>;

StreamKey key_of(const TraceEvent& e) {
  return {e.level, e.rank, e.thread.value_or(UINT32_MAX)};
}

template <typename T>
void append_number(std::string& buf, T value) {
  char tmp[32];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof tmp, value);
  buf.append(tmp, ptr);
}

template <typename T>
void append_optional(std::string& buf, const std::optional<T>& v, std::string_view null_text) {
  if (v)
    append_number(buf, *v);
  else
    buf.append(null_text);
}

template <typename T>
T parse_number(std::string_view s, std::size_t index) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw TraceError(index, "malformed number '" + std::string(s) + "'");
  return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

TraceEvent event_from_json(const nlohmann::json& j, std::size_t index) {
  try {
    if (j.at("v").get<int>() != kTraceSchemaVersion)
      throw TraceError(index, "unsupported schema version");
    TraceEvent e;
    auto level = parse_level(j.at("level").get<std::string>());
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!level || !kind) throw TraceError(index, "unknown level or kind");
    e.level = *level;
    e.kind = *kind;
    e.rank = j.at("rank").get<std::uint32_t>();
    if (!j.at("thread").is_null()) e.thread = j.at("thread").get<std::uint32_t>();
    e.t = j.at("t").get<double>();
    if (!j.at("start").is_null()) e.start = j.at("start").get<std::uint64_t>();
    if (!j.at("size").is_null()) e.size = j.at("size").get<std::uint64_t>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw TraceError(index, ex.what());
  }
}

TraceEvent event_from_csv(std::string_view line, std::size_t index) {
  auto f = split_csv(line);
  if (f.size() != 8) throw TraceError(index, "expected 8 CSV fields");
  if (parse_number<int>(f[0], index) != kTraceSchemaVersion)
    throw TraceError(index, "unsupported schema version");
  TraceEvent e;
  auto level = parse_level(f[1]);
  auto kind = parse_kind(f[4]);
  if (!level || !kind) throw TraceError(index, "unknown level or kind");
  e.level = *level;
  e.kind = *kind;
  e.rank = parse_number<std::uint32_t>(f[2], index);
  if (!f[3].empty()) e.thread = parse_number<std::uint32_t>(f[3], index);
  e.t = parse_number<double>(f[5], index);
  if (!f[6].empty()) e.start = parse_number<std::uint64_t>(f[6], index);
  if (!f[7].empty()) e.size = parse_number<std::uint64_t>(f[7], index);
  return e;
}

}  // namespace

std::string_view level_name(TraceLevel level) noexcept {
  return level == TraceLevel::process ? "process" : "thread";
}

std::string_view kind_name(TraceKind kind) noexcept {
  switch (kind) {
    case TraceKind::chunk_start: return "chunk_start";
    case TraceKind::chunk_end: return "chunk_end";
    case TraceKind::wait_start: return "wait_start";
    case TraceKind::wait_end: return "wait_end";
    case TraceKind::timestep_start: return "timestep_start";
    case TraceKind::timestep_end: return "timestep_end";
  }
  return "?";
}

std::optional<TraceLevel> parse_level(std::string_view s) noexcept {
  if (s == "process") return TraceLevel::process;
  if (s == "thread") return TraceLevel::thread;
  return std::nullopt;
}

std::optional<TraceKind> parse_kind(std::string_view s) noexcept {
  for (auto k : {TraceKind::chunk_start, TraceKind::chunk_end, TraceKind::wait_start,
                 TraceKind::wait_end, TraceKind::timestep_start, TraceKind::timestep_end})
    if (kind_name(k) == s) return k;
  return std::nullopt;
}

void validate_trace(std::span<const TraceEvent> trace) {
  std::map<StreamKey, OpenState> open;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceEvent& e = trace[i];
    if (e.level == TraceLevel::thread && !e.thread)
      throw TraceError(i, "thread-level event without a thread id");
    if (e.level == TraceLevel::process && e.thread)
      throw TraceError(i, "process-level event with a thread id");
    if (!(e.t >= 0.0)) throw TraceError(i, "negative or NaN timestamp");

    OpenState& s = open[key_of(e)];
    if (s.seen && e.t < s.last_t) throw TraceError(i, "timestamp goes backwards");
    s.seen = true;
    s.last_t = e.t;

    switch (e.kind) {
      case TraceKind::chunk_start:
        if (!e.start || !e.size) throw TraceError(i, "chunk event without a range");
        if (s.in_chunk || s.in_wait) throw TraceError(i, "chunk_start while another region is open");
        s.in_chunk = true;
        s.chunk_start = *e.start;
        s.chunk_size = *e.size;
        break;
      case TraceKind::chunk_end:
        if (!s.in_chunk) throw TraceError(i, "chunk_end without chunk_start");
        if (!e.start || !e.size || *e.start != s.chunk_start || *e.size != s.chunk_size)
          throw TraceError(i, "chunk_end does not match the open chunk");
        s.in_chunk = false;
        break;
      case TraceKind::wait_start:
        if (s.in_wait || s.in_chunk) throw TraceError(i, "wait_start while another region is open");
        s.in_wait = true;
        break;
      case TraceKind::wait_end:
        if (!s.in_wait) throw TraceError(i, "wait_end without wait_start");
        s.in_wait = false;
        break;
      case TraceKind::timestep_start:
        if (s.in_timestep || s.in_chunk || s.in_wait)
          throw TraceError(i, "timestep_start inside an open region");
        s.in_timestep = true;
        break;
      case TraceKind::timestep_end:
        if (!s.in_timestep || s.in_chunk || s.in_wait)
          throw TraceError(i, "timestep_end does not close a time-step");
        s.in_timestep = false;
        break;
    }
  }
  for (const auto& [key, s] : open)
    if (s.in_chunk || s.in_wait || s.in_timestep)
      throw TraceError(trace.size(), "trace ends with an open region");
}

WaitDecomposition wait_decomposition(std::span<const TraceEvent> trace) {
  validate_trace(trace);
  WaitDecomposition w;
  std::vector<bool> rank_has_proc_end;
  auto ensure = [&](std::uint32_t rank, std::optional<std::uint32_t> thread) {
    if (w.rank_finish.size() <= rank) {
      w.rank_finish.resize(rank + 1, 0.0);
      w.thread_finish.resize(rank + 1);
      rank_has_proc_end.resize(rank + 1, false);
    }
    if (thread && w.thread_finish[rank].size() <= *thread)
      w.thread_finish[rank].resize(*thread + 1, 0.0);
  };
  for (const TraceEvent& e : trace) {
    ensure(e.rank, e.thread);
    if (e.kind != TraceKind::chunk_end) continue;
    if (e.level == TraceLevel::process) {
      w.rank_finish[e.rank] = std::max(w.rank_finish[e.rank], e.t);
      rank_has_proc_end[e.rank] = true;
    } else {
      double& f = w.thread_finish[e.rank][*e.thread];
      f = std::max(f, e.t);
    }
  }
  const std::size_t ranks = w.rank_finish.size();
  for (std::size_t r = 0; r < ranks; ++r)
    if (!rank_has_proc_end[r] && !w.thread_finish[r].empty())
      w.rank_finish[r] = *std::max_element(w.thread_finish[r].begin(), w.thread_finish[r].end());

  const double global = ranks ? *std::max_element(w.rank_finish.begin(), w.rank_finish.end()) : 0.0;
  w.process_idle.resize(ranks);
  w.thread_idle.resize(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    w.process_idle[r] = global - w.rank_finish[r];
    w.total_process_idle += w.process_idle[r];
    const auto& tf = w.thread_finish[r];
    const double last = tf.empty() ? 0.0 : *std::max_element(tf.begin(), tf.end());
    for (double f : tf) {
      w.thread_idle[r].push_back(last - f);
      w.total_thread_idle += last - f;
    }
  }
  return w;
}

std::optional<TraceFormat> parse_trace_format(std::string_view s) noexcept {
  if (s == "json-lines" || s == "jsonl") return TraceFormat::json_lines;
  if (s == "csv") return TraceFormat::csv;
  return std::nullopt;
}

void write_trace(std::ostream& out, std::span<const TraceEvent> trace, TraceFormat format) {
  std::string buf;
  buf.reserve(96 * (trace.size() + 1));
  if (format == TraceFormat::json_lines) {
    buf.append(R"({"v":1,"schema":"dls-trace","fields":["level","rank","thread","kind","t","start","size"]})");
    buf.push_back('\n');
    for (const TraceEvent& e : trace) {
      buf.append(R"({"v":1,"level":")");
      buf.append(level_name(e.level));
      buf.append(R"(","rank":)");
      append_number(buf, e.rank);
      buf.append(R"(,"thread":)");
      append_optional(buf, e.thread, "null");
      buf.append(R"(,"kind":")");
      buf.append(kind_name(e.kind));
      buf.append(R"(","t":)");
      append_number(buf, e.t);
      buf.append(R"(,"start":)");
      append_optional(buf, e.start, "null");
      buf.append(R"(,"size":)");
      append_optional(buf, e.size, "null");
      buf.append("}\n");
    }
  } else {
    buf.append(kCsvHeader);
    buf.push_back('\n');
    for (const TraceEvent& e : trace) {
      buf.append("1,");
      buf.append(level_name(e.level));
      buf.push_back(',');
      append_number(buf, e.rank);
      buf.push_back(',');
      append_optional(buf, e.thread, "");
      buf.push_back(',');
      buf.append(kind_name(e.kind));
      buf.push_back(',');
      append_number(buf, e.t);
      buf.push_back(',');
      append_optional(buf, e.start, "");
      buf.push_back(',');
      append_optional(buf, e.size, "");
      buf.push_back('\n');
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void export_trace(const std::string& path, std::span<const TraceEvent> trace, TraceFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open trace file for writing: " + path);
  write_trace(out, trace, format);
  out.flush();
  if (!out) throw Error(Errc::io_error, "failed writing trace file: " + path);
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  if (!std::getline(in, line)) return events;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool json = false;
  if (line == kCsvHeader) {
    json = false;
  } else if (!line.empty() && line.front() == '{') {
    json = true;
    try {
      auto header = nlohmann::json::parse(line);
      if (header.value("v", 0) != kTraceSchemaVersion || header.value("schema", "") != "dls-trace")
        throw TraceError(0, "not a dls-trace header");
    } catch (const nlohmann::json::exception& ex) {
      throw TraceError(0, ex.what());
    }
  } else {
    throw TraceError(0, "unrecognised trace header");
  }
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& ex) {
        throw TraceError(index, ex.what());
      }
      events.push_back(event_from_json(j, index));
    } else {
      events.push_back(event_from_csv(line, index));
    }
    ++index;
  }
  return events;
}

std::vector<TraceEvent> import_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open trace file: " + path);
  return read_trace(in);
}

}  // namespace dls::metrics
