#include "bench/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace bench {

using nlohmann::json;

std::string_view kernel_name(Kernel k) {
  switch (k) {
    case Kernel::mandelbrot: return "mandelbrot";
    case Kernel::spinimage: return "spinimage";
    case Kernel::synthetic: return "synthetic";
    case Kernel::timestep: return "timestep";
  }
  return "?";
}

std::string_view measure_name(Measure m) {
  return m == Measure::timesteps ? "timesteps" : "repetitions";
}

std::string_view trace_keep_name(TraceKeep t) {
  switch (t) {
    case TraceKeep::none: return "none";
    case TraceKeep::first: return "first";
    case TraceKeep::all: return "all";
  }
  return "?";
}

std::vector<dls_technique> default_proc_techniques() {
  return {DLS_NODLB, DLS_MFSC,  DLS_GSS,   DLS_TSS,   DLS_FAC,  DLS_AWF,
          DLS_AWF_B, DLS_AWF_C, DLS_AWF_D, DLS_AWF_E, DLS_AF};
}

std::vector<dls_technique> default_thread_techniques() {
  return {DLS_STATIC, DLS_SS, DLS_GSS, DLS_TSS, DLS_FAC, DLS_RAND};
}

namespace {

const char* kDistributions = "constant, uniform, gaussian, exponential, hotspot";

// Typed access to one JSON object; every problem is appended to `issues`
// and unknown keys are reported when the reader is finished.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string prefix, ConfigIssues& issues)
      : obj_(obj), prefix_(std::move(prefix)), issues_(issues) {}

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return false;
    const json& v = *it;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return error(key, "must be true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        return error(key, "must be a non-negative integer");
      const auto u = v.get<std::uint64_t>();
      if (u > std::numeric_limits<T>::max()) return error(key, "is too large");
      out = static_cast<T>(u);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return error(key, "must be a number");
      out = v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return error(key, "must be a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array()) return error(key, "must be an array of strings");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_string()) return error(key, "must be an array of strings");
        out.push_back(e.get<std::string>());
      }
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) return error(key, "must be an array of numbers");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number()) return error(key, "must be an array of numbers");
        out.push_back(e.get<double>());
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
    return true;
  }

  const json* object(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    if (!it->is_object()) {
      error(key, "must be an object");
      return nullptr;
    }
    return &*it;
  }

  std::string path(const std::string& key) const { return prefix_ + key; }

  void finish() {
    for (const auto& [key, _] : obj_.items())
      if (!seen_.count(key) && !(key.size() && key[0] == '_'))
        issues_.errors.push_back("unknown key '" + prefix_ + key + "'");
  }

  bool error(const std::string& key, const std::string& what) {
    issues_.errors.push_back(path(key) + " " + what);
    return false;
  }

 private:
  const json& obj_;
  std::string prefix_;
  ConfigIssues& issues_;
  std::set<std::string> seen_;
};

std::vector<dls_technique> parse_techniques(const std::vector<std::string>& names,
                                            const std::string& key, ConfigIssues& issues) {
  std::vector<dls_technique> out;
  for (const auto& name : names) {
    dls_technique t;
    if (dls_technique_parse(name.c_str(), &t) != DLS_OK) {
      issues.errors.push_back(key + ": unknown technique '" + name +
                              "'; valid: " + dls_technique_valid_names());
      continue;
    }
    if (std::find(out.begin(), out.end(), t) != out.end()) {
      issues.warnings.push_back(key + ": duplicate technique '" + name + "' ignored");
      continue;
    }
    out.push_back(t);
  }
  return out;
}

std::optional<Fsc> read_fsc(ObjectReader& parent, const json& fsc, const std::string& key,
                            ConfigIssues& issues) {
  ObjectReader r(fsc, parent.path("fsc.") + key + ".", issues);
  Fsc f;
  bool a = r.get("overhead_s", f.overhead_s);
  bool b = r.get("sigma_s", f.sigma_s);
  r.finish();
  if (!a || !b) {
    issues.errors.push_back("fsc." + key + " needs both overhead_s and sigma_s");
    return std::nullopt;
  }
  return f;
}

void apply_kernel_defaults(BenchConfig& c) {
  dls_mandelbrot_spec_init(&c.mandelbrot);
  dls_spin_image_spec_init(&c.spin);
  dls_synthetic_spec_init(&c.synthetic);
  c.synthetic.distribution = DLS_DIST_HOTSPOT;
  c.synthetic.param_a = 0.05;
  c.synthetic.param_b = 20.0;
  if (c.kernel == Kernel::timestep) {
    c.synthetic.drift = 0.01;
    c.timesteps = 10;
  }
}

void read_kernel_block(ObjectReader& top, BenchConfig& c, ConfigIssues& issues, bool n_given) {
  const json* mb = top.object("mandelbrot");
  const json* si = top.object("spinimage");
  const json* sy = top.object("synthetic");

  if (mb) {
    ObjectReader r(*mb, "mandelbrot.", issues);
    r.get("width", c.mandelbrot.width);
    r.get("height", c.mandelbrot.height);
    r.get("max_iterations", c.mandelbrot.max_iterations);
    r.get("center_real", c.mandelbrot.center_real);
    r.get("center_imag", c.mandelbrot.center_imag);
    r.get("view_width", c.mandelbrot.view_width);
    r.get("scale_color", c.mandelbrot.scale_color);
    r.finish();
  }
  if (si) {
    ObjectReader r(*si, "spinimage.", issues);
    r.get("width", c.spin.width);
    r.get("bin_size", c.spin.bin_size);
    r.get("support_angle", c.spin.support_angle);
    if (r.get("points", c.spin.points) && n_given && c.kernel == Kernel::spinimage &&
        c.spin.points != c.n)
      issues.errors.push_back("N disagrees with spinimage.points");
    r.get("clusters", c.spin.clusters);
    r.get("spread", c.spin.spread);
    r.get("normal_noise", c.spin.normal_noise);
    r.get("cloud_file", c.cloud_file);
    r.finish();
  }
  if (sy) {
    ObjectReader r(*sy, "synthetic.", issues);
    std::string dist;
    if (r.get("distribution", dist) &&
        dls_distribution_parse(dist.c_str(), &c.synthetic.distribution) != DLS_OK)
      issues.errors.push_back("synthetic.distribution: unknown distribution '" + dist +
                              "'; valid: " + kDistributions);
    r.get("base_us", c.synthetic.base_us);
    r.get("a", c.synthetic.param_a);
    r.get("b", c.synthetic.param_b);
    r.get("drift", c.synthetic.drift);
    r.get("rank_multipliers", c.rank_multipliers);
    r.finish();
  }
}

void resolve_n(BenchConfig& c, bool n_given, ConfigIssues& issues) {
  switch (c.kernel) {
    case Kernel::mandelbrot: {
      const std::uint64_t px = std::uint64_t{c.mandelbrot.width} * c.mandelbrot.height;
      if (n_given && c.n != px)
        issues.errors.push_back("N must equal mandelbrot.width * mandelbrot.height (" +
                                std::to_string(px) + ")");
      c.n = px;
      break;
    }
    case Kernel::spinimage:
      if (n_given) c.spin.points = c.n;
      c.n = c.spin.points;  // a cloud file overrides this at run time
      break;
    case Kernel::synthetic:
    case Kernel::timestep:
      if (!n_given) c.n = 10000;
      break;
  }
}

}  // namespace

void check_config(const BenchConfig& c, ConfigIssues& issues) {
  auto& err = issues.errors;
  if (c.proc_techniques.empty()) err.push_back("proc_techniques must not be empty");
  if (c.thread_techniques.empty()) err.push_back("thread_techniques must not be empty");
  if (c.repetitions < 1) err.push_back("repetitions must be at least 1");
  if (c.timesteps < 1) err.push_back("timesteps must be at least 1");
  if (c.ranks < 1) err.push_back("P must be at least 1");
  if (c.threads < 1) err.push_back("T must be at least 1");
  if (c.n < 1 && c.cloud_file.empty()) err.push_back("N must be at least 1");
  if (c.measure == Measure::timesteps && c.timesteps != 1)
    err.push_back("measure \"timesteps\" takes its step count from repetitions; leave timesteps at 1");
  if (c.proc_min_chunk && c.thread_min_chunk && c.proc_min_chunk < c.thread_min_chunk)
    err.push_back("proc_min_chunk must be at least thread_min_chunk");

  for (auto t : c.proc_techniques) {
    const std::string name = dls_technique_name(t);
    if (!c.override_excluded) {
      if (t == DLS_SS)
        err.push_back("proc technique SS is excluded: one task per request to a whole rank "
                      "leaves all but one of its threads idle; use --override-excluded to run it");
      if (t == DLS_WF)
        err.push_back("proc technique WF is excluded: it needs fixed per-rank weights known "
                      "before the run; use --override-excluded to run it");
      if (t == DLS_FSC)
        err.push_back("proc technique FSC is excluded: it needs a profiled scheduling overhead "
                      "and iteration-time deviation; use --override-excluded to run it");
    } else if (t == DLS_FSC && !c.proc_fsc) {
      err.push_back("proc technique FSC needs fsc.proc {overhead_s, sigma_s}");
    }
  }
  for (auto t : c.thread_techniques) {
    if (t == DLS_NODLB) err.push_back("thread technique NODLB is process-level only; use STATIC");
    if (t == DLS_FSC) {
      if (!c.override_excluded)
        err.push_back("thread technique FSC is excluded: it needs a profiled scheduling overhead "
                      "and iteration-time deviation; use --override-excluded to run it");
      else if (!c.thread_fsc)
        err.push_back("thread technique FSC needs fsc.thread {overhead_s, sigma_s}");
    }
  }

  if (!c.rank_multipliers.empty() && c.rank_multipliers.size() != c.ranks)
    err.push_back("synthetic.rank_multipliers must have P entries");

  if (c.steps_per_run() == 1) {
    std::string awf;
    for (auto t : c.proc_techniques)
      if (dls_technique_is_awf_family(t)) awf += (awf.empty() ? "" : ", ") + std::string(dls_technique_name(t));
    if (!awf.empty())
      issues.warnings.push_back(awf + ": weights adapt across time-steps, but each run has a "
                                      "single time-step");
  }
}

LoadedConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  LoadedConfig out;
  auto& issues = out.issues;
  BenchConfig& c = out.config;

  json doc = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string_view::npos) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      issues.errors.push_back(std::string("not valid JSON: ") + e.what());
      return out;
    }
  }
  if (!doc.is_object()) {
    issues.errors.push_back("config must be a JSON object");
    return out;
  }

  ObjectReader top(doc, "", issues);
  std::string kernel;
  if (!top.get("kernel", kernel)) {
    if (!top.has("kernel"))
      issues.errors.push_back("kernel is required (mandelbrot, spinimage, synthetic, timestep)");
  } else if (kernel == "mandelbrot") {
    c.kernel = Kernel::mandelbrot;
  } else if (kernel == "spinimage") {
    c.kernel = Kernel::spinimage;
  } else if (kernel == "synthetic") {
    c.kernel = Kernel::synthetic;
  } else if (kernel == "timestep") {
    c.kernel = Kernel::timestep;
  } else {
    issues.errors.push_back("unknown kernel '" + kernel +
                            "'; valid: mandelbrot, spinimage, synthetic, timestep");
  }
  apply_kernel_defaults(c);

  const bool n_given = top.get("N", c.n);
  top.get("P", c.ranks);
  top.get("T", c.threads);

  std::vector<std::string> names;
  c.proc_techniques = default_proc_techniques();
  if (top.get("proc_techniques", names))
    c.proc_techniques = parse_techniques(names, "proc_techniques", issues);
  c.thread_techniques = default_thread_techniques();
  if (top.get("thread_techniques", names))
    c.thread_techniques = parse_techniques(names, "thread_techniques", issues);

  top.get("repetitions", c.repetitions);
  top.get("timesteps", c.timesteps);
  std::string s;
  if (top.get("measure", s)) {
    if (s == "repetitions") c.measure = Measure::repetitions;
    else if (s == "timesteps") c.measure = Measure::timesteps;
    else issues.errors.push_back("measure must be \"repetitions\" or \"timesteps\"");
  }
  top.get("seed", c.seed);
  c.synthetic.seed = c.seed;
  c.spin.seed = c.seed;
  top.get("output", c.output);
  if (top.get("transport", s)) {
    if (s == "in-process") c.transport = DLS_TRANSPORT_IN_PROCESS;
    else if (s == "local-socket") c.transport = DLS_TRANSPORT_LOCAL_SOCKET;
    else issues.errors.push_back("transport must be \"in-process\" or \"local-socket\"");
  }
  if (top.get("trace_detail", s)) {
    if (s == "none") c.trace_detail = DLS_TRACE_NONE;
    else if (s == "process") c.trace_detail = DLS_TRACE_PROCESS;
    else if (s == "all") c.trace_detail = DLS_TRACE_ALL;
    else issues.errors.push_back("trace_detail must be \"none\", \"process\" or \"all\"");
  }
  if (top.get("trace_repetitions", s)) {
    if (s == "none") c.trace_keep = TraceKeep::none;
    else if (s == "first") c.trace_keep = TraceKeep::first;
    else if (s == "all") c.trace_keep = TraceKeep::all;
    else issues.errors.push_back("trace_repetitions must be \"none\", \"first\" or \"all\"");
  }
  if (top.get("trace_format", s) && dls_trace_format_parse(s.c_str(), &c.trace_format) != DLS_OK)
    issues.errors.push_back("trace_format must be \"json-lines\" or \"csv\"");
  top.get("proc_min_chunk", c.proc_min_chunk);
  top.get("thread_min_chunk", c.thread_min_chunk);
  if (const json* fsc = top.object("fsc")) {
    ObjectReader fr(*fsc, "fsc.", issues);
    if (const json* p = fr.object("proc")) c.proc_fsc = read_fsc(top, *p, "proc", issues);
    if (const json* t = fr.object("thread")) c.thread_fsc = read_fsc(top, *t, "thread", issues);
    fr.finish();
  }
  top.get("warmup", c.warmup);
  top.get("serialize_requests", c.serialize_requests);
  top.get("allow_oversubscribe", c.allow_oversubscribe);
  top.get("override_excluded", c.override_excluded);

  read_kernel_block(top, c, issues, n_given);
  top.finish();
  resolve_n(c, n_given, issues);

  if (overrides.output) c.output = *overrides.output;
  c.serialize_requests |= overrides.serialize_requests;
  c.allow_oversubscribe |= overrides.allow_oversubscribe;
  c.override_excluded |= overrides.override_excluded;

  check_config(c, issues);
  return out;
}

LoadedConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    LoadedConfig out;
    out.issues.errors.push_back("cannot read config file " + path);
    return out;
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

json config_to_json(const BenchConfig& c) {
  auto names = [](const std::vector<dls_technique>& ts) {
    json a = json::array();
    for (auto t : ts) a.push_back(dls_technique_name(t));
    return a;
  };
  auto fsc = [](const std::optional<Fsc>& f) -> json {
    if (!f) return nullptr;
    return {{"overhead_s", f->overhead_s}, {"sigma_s", f->sigma_s}};
  };
  const char* dists[] = {"constant", "uniform", "gaussian", "exponential", "hotspot"};
  const char* details[] = {"none", "process", "all"};
  json j = {
      {"kernel", kernel_name(c.kernel)},
      {"N", c.n},
      {"P", c.ranks},
      {"T", c.threads},
      {"proc_techniques", names(c.proc_techniques)},
      {"thread_techniques", names(c.thread_techniques)},
      {"repetitions", c.repetitions},
      {"timesteps", c.timesteps},
      {"measure", measure_name(c.measure)},
      {"seed", c.seed},
      {"output", c.output},
      {"transport", c.transport == DLS_TRANSPORT_LOCAL_SOCKET ? "local-socket" : "in-process"},
      {"trace_detail", details[c.trace_detail]},
      {"trace_repetitions", trace_keep_name(c.trace_keep)},
      {"trace_format", c.trace_format == DLS_TRACE_CSV ? "csv" : "json-lines"},
      {"proc_min_chunk", c.proc_min_chunk},
      {"thread_min_chunk", c.thread_min_chunk},
      {"fsc", {{"proc", fsc(c.proc_fsc)}, {"thread", fsc(c.thread_fsc)}}},
      {"warmup", c.warmup},
      {"serialize_requests", c.serialize_requests},
      {"allow_oversubscribe", c.allow_oversubscribe},
      {"override_excluded", c.override_excluded},
  };
  switch (c.kernel) {
    case Kernel::mandelbrot:
      j["mandelbrot"] = {{"width", c.mandelbrot.width},
                         {"height", c.mandelbrot.height},
                         {"max_iterations", c.mandelbrot.max_iterations},
                         {"center_real", c.mandelbrot.center_real},
                         {"center_imag", c.mandelbrot.center_imag},
                         {"view_width", c.mandelbrot.view_width},
                         {"scale_color", c.mandelbrot.scale_color}};
      break;
    case Kernel::spinimage:
      j["spinimage"] = {{"width", c.spin.width},
                        {"bin_size", c.spin.bin_size},
                        {"support_angle", c.spin.support_angle},
                        {"points", c.spin.points},
                        {"clusters", c.spin.clusters},
                        {"spread", c.spin.spread},
                        {"normal_noise", c.spin.normal_noise},
                        {"cloud_file", c.cloud_file.empty() ? json(nullptr) : json(c.cloud_file)}};
      break;
    case Kernel::synthetic:
    case Kernel::timestep:
      j["synthetic"] = {{"distribution", dists[c.synthetic.distribution]},
                        {"base_us", c.synthetic.base_us},
                        {"a", c.synthetic.param_a},
                        {"b", c.synthetic.param_b},
                        {"drift", c.synthetic.drift},
                        {"rank_multipliers", c.rank_multipliers}};
      break;
  }
  return j;
}

std::uint64_t run_digest(const BenchConfig& c) {
  json j = config_to_json(c);
  // knobs that do not change what a cell executes
  for (const char* k : {"output", "proc_techniques", "thread_techniques", "allow_oversubscribe",
                        "override_excluded"})
    j.erase(k);
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bench
