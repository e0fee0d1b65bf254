#include "cascade/config.hpp"
#include "cascade/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cascade {

namespace {

struct RawValue {
  bool is_list = false;
  std::string scalar;
  std::vector<std::string> items;
  int line = 0;
};

using RawSection = std::map<std::string, RawValue>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, RawSection> tokenize(const std::string& text) {
  std::map<std::string, RawSection> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (out.count(section)) throw ConfigError(section, "duplicate section");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
    if (section.empty()) throw ConfigError(where, "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "empty key");
    RawValue rv;
    rv.line = lineno;
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']') throw ConfigError(section + "." + key, "unterminated list");
      rv.is_list = true;
      const std::string body = trim(val.substr(1, val.size() - 2));
      if (!body.empty()) {
        std::istringstream items(body);
        std::string item;
        while (std::getline(items, item, ',')) rv.items.push_back(trim(item));
      }
    } else {
      rv.scalar = val;
    }
    if (out[section].count(key)) throw ConfigError(section + "." + key, "duplicate key");
    out[section][key] = rv;
  }
  return out;
}

double to_number(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key, "expected a number, got '" + s + "'");
  }
  return v;
}

template <typename Int>
Int to_integer(const std::string& s, const std::string& key) {
  Int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key, "expected an integer, got '" + s + "'");
  }
  return v;
}

class SectionReader {
 public:
  SectionReader(std::string name, const RawSection& raw, std::set<std::string> allowed)
      : name_(std::move(name)), raw_(raw) {
    for (const auto& [key, _] : raw_) {
      if (!allowed.count(key)) throw ConfigError(name_ + "." + key, "unknown key");
    }
  }

  bool has(const std::string& key) const { return raw_.count(key) > 0; }
  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  const RawValue& get(const std::string& key) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) throw ConfigError(qualified(key), "missing required key");
    return it->second;
  }

  std::string scalar(const std::string& key) const {
    const RawValue& v = get(key);
    if (v.is_list) throw ConfigError(qualified(key), "expected a scalar, got a list");
    return v.scalar;
  }

  double number(const std::string& key) const { return to_number(scalar(key), qualified(key)); }
  template <typename Int>
  Int integer(const std::string& key) const {
    return to_integer<Int>(scalar(key), qualified(key));
  }

  std::vector<std::string> list(const std::string& key) const {
    const RawValue& v = get(key);
    if (!v.is_list) throw ConfigError(qualified(key), "expected a list [a, b, ...]");
    return v.items;
  }

  std::vector<double> numbers(const std::string& key) const {
    const auto items = list(key);
    std::vector<double> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      out.push_back(to_number(items[i], qualified(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  void number_if(const std::string& key, double& dst) const {
    if (has(key)) dst = number(key);
  }
  template <typename Int>
  void integer_if(const std::string& key, Int& dst) const {
    if (has(key)) dst = integer<Int>(key);
  }

 private:
  std::string name_;
  const RawSection& raw_;
};

void require_positive(const std::vector<double>& v, const std::string& key) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw ConfigError(key + "[" + std::to_string(i) + "]", "must be positive");
    }
  }
}

ModelSection read_model(const SectionReader& r) {
  ModelSection m;
  m.k = r.integer<int>("k");
  if (m.k < 1) throw ConfigError(r.qualified("k"), "must be >= 1");
  m.mu = r.numbers("mu");
  if (m.mu.size() != static_cast<std::size_t>(m.k)) {
    throw ConfigError(r.qualified("mu"), "expected k = " + std::to_string(m.k) + " entries");
  }
  require_positive(m.mu, r.qualified("mu"));
  if (m.k > 1 || r.has("alpha")) m.alpha = r.numbers("alpha");
  if (m.alpha.size() != static_cast<std::size_t>(m.k - 1)) {
    throw ConfigError(r.qualified("alpha"), "expected k - 1 entries");
  }
  require_positive(m.alpha, r.qualified("alpha"));
  if (r.has("feedback")) m.feedback = r.scalar("feedback");
  if (m.feedback == "hill") {
    for (const char* key : {"hill.mu", "hill.b", "hill.h"}) {
      const double v = r.number(key);
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(r.qualified(key), "must be positive");
      m.hill.push_back(v);
    }
  } else if (m.feedback == "table") {
    m.table_x = r.numbers("table_x");
    m.table_y = r.numbers("table_y");
    if (m.table_x.size() != m.table_y.size() || m.table_x.size() < 2) {
      throw ConfigError(r.qualified("table_y"), "needs >= 2 entries, one per table_x");
    }
  } else if (m.feedback == "affine") {
    m.slope = r.number("slope");
    r.number_if("intercept", m.intercept);
  } else {
    throw ConfigError(r.qualified("feedback"), "expected hill, table or affine");
  }
  return m;
}

Hes1RawParams read_hes1(const SectionReader& r) {
  Hes1RawParams p;
  p.alpha = r.number("alpha");
  p.k_half = r.number("k");
  p.h = r.number("h");
  p.beta = r.number("beta");
  p.k_r = r.number("k_r");
  p.k_p = r.number("k_p");
  p.tau_r = r.number("tau_r");
  const std::pair<const char*, double> vals[] = {{"alpha", p.alpha}, {"k", p.k_half},
                                                 {"h", p.h},         {"beta", p.beta},
                                                 {"k_r", p.k_r},     {"k_p", p.k_p},
                                                 {"tau_r", p.tau_r}};
  for (const auto& [key, v] : vals) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(r.qualified(key), "must be positive");
  }
  if (p.h < 1.0) throw ConfigError(r.qualified("h"), "must be >= 1");
  return p;
}

CookeSection read_cooke(const SectionReader& r) {
  CookeSection c;
  c.b = r.number("b");
  c.c = r.number("c");
  c.tau = r.number("tau");
  if (!(c.b >= 0.0)) throw ConfigError(r.qualified("b"), "must be >= 0");
  if (!(c.c > 0.0)) throw ConfigError(r.qualified("c"), "must be positive");
  if (!(c.tau > 0.0)) throw ConfigError(r.qualified("tau"), "must be positive");
  return c;
}

DelayKernel make_kernel(const KernelEntry& e, double tau, const std::filesystem::path& base,
                        const std::string& key) {
  try {
    if (e.kind == "dirac") return DelayKernel::dirac(e.params.at(0), tau);
    if (e.kind == "uniform") return DelayKernel::uniform(e.params.at(0), e.params.at(1), tau);
    auto [s, d] = read_kernel_table(base / e.path);
    return DelayKernel::tabulated(std::move(s), std::move(d), tau);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(key, ex.what());
  }
}

// Kernel keys for equation j are `kernelJ`, `kernelJ.at`, `kernelJ.a`,
// `kernelJ.b`, `kernelJ.file`; the unnumbered `kernel*` keys are the default.
KernelEntry read_kernel(const SectionReader& r, const std::string& prefix,
                        const std::filesystem::path& base) {
  KernelEntry e;
  e.kind = r.scalar(prefix);
  auto param = [&](const std::string& suffix) {
    const std::string key = prefix + "." + suffix;
    e.params.push_back(r.number(key));
  };
  if (e.kind == "dirac") {
    param("at");
  } else if (e.kind == "uniform") {
    param("a");
    param("b");
  } else if (e.kind == "table") {
    e.path = r.scalar(prefix + ".file");
    if (!std::filesystem::exists(base / e.path)) {
      throw ConfigError(r.qualified(prefix + ".file"), "file not found: " + (base / e.path).string());
    }
  } else {
    throw ConfigError(r.qualified(prefix), "expected dirac, uniform or table, got '" + e.kind + "'");
  }
  return e;
}

DelaysSection read_delays(const SectionReader& r, int k, const std::filesystem::path& base) {
  DelaysSection d;
  d.tau = r.number("tau");
  if (!(d.tau >= 0.0)) throw ConfigError(r.qualified("tau"), "must be >= 0");
  for (int j = 1; j <= k; ++j) {
    std::string prefix = "kernel" + std::to_string(j);
    if (!r.has(prefix)) prefix = "kernel";
    if (!r.has(prefix)) {
      throw ConfigError(r.qualified("kernel" + std::to_string(j)), "no kernel for this equation");
    }
    KernelEntry e = read_kernel(r, prefix, base);
    make_kernel(e, d.tau, base, r.qualified(prefix));
    d.kernels.push_back(std::move(e));
  }
  return d;
}

SimulationSection read_simulation(const SectionReader& r) {
  SimulationSection s;
  r.number_if("t_end", s.t_end);
  r.number_if("step", s.step);
  if (r.has("history")) s.history = r.scalar("history");
  if (r.has("history_value")) s.history_value = r.numbers("history_value");
  if (r.has("history_bounds")) s.history_bounds = r.numbers("history_bounds");
  r.integer_if("history_nodes", s.history_nodes);
  r.integer_if("seed", s.seed);
  r.integer_if("mc_runs", s.mc_runs);
  r.number_if("tol", s.tol);
  r.number_if("window", s.window);
  if (!(s.t_end > 0.0)) throw ConfigError(r.qualified("t_end"), "must be positive");
  if (!(s.step > 0.0)) throw ConfigError(r.qualified("step"), "must be positive");
  if (s.history != "constant" && s.history != "random") {
    throw ConfigError(r.qualified("history"), "expected constant or random");
  }
  if (s.history == "constant" && s.history_value.empty()) {
    throw ConfigError(r.qualified("history_value"), "required for a constant history");
  }
  if (s.history_bounds.size() % 2 != 0 || s.history_bounds.empty()) {
    throw ConfigError(r.qualified("history_bounds"), "expected [lo, hi] pairs");
  }
  for (std::size_t i = 0; i < s.history_bounds.size(); i += 2) {
    if (!(s.history_bounds[i] <= s.history_bounds[i + 1])) {
      throw ConfigError(r.qualified("history_bounds") + "[" + std::to_string(i) + "]",
                        "lower bound exceeds upper bound");
    }
  }
  if (s.history_nodes < 2) throw ConfigError(r.qualified("history_nodes"), "must be >= 2");
  if (s.mc_runs < 1) throw ConfigError(r.qualified("mc_runs"), "must be >= 1");
  if (!(s.tol > 0.0)) throw ConfigError(r.qualified("tol"), "must be positive");
  if (!(s.window >= 0.0)) throw ConfigError(r.qualified("window"), "must be >= 0");
  return s;
}

AnalysisSection read_analysis(const SectionReader& r) {
  AnalysisSection a;
  r.integer_if("m_max", a.m_max);
  r.integer_if("samples_per_face", a.samples_per_face);
  r.integer_if("majorant_nodes", a.majorant_nodes);
  r.number_if("cone_margin", a.cone_margin);
  r.number_if("attractor_tol", a.attractor_tol);
  r.number_if("omega_max", a.omega_max);
  r.integer_if("mikhailov_samples", a.mikhailov_samples);
  if (a.m_max < 2) throw ConfigError(r.qualified("m_max"), "must be >= 2");
  if (a.samples_per_face < 0) throw ConfigError(r.qualified("samples_per_face"), "must be >= 0");
  if (a.majorant_nodes < 2) throw ConfigError(r.qualified("majorant_nodes"), "must be >= 2");
  if (!(a.cone_margin >= 0.0)) throw ConfigError(r.qualified("cone_margin"), "must be >= 0");
  if (!(a.omega_max > 0.0)) throw ConfigError(r.qualified("omega_max"), "must be positive");
  return a;
}

std::string fmt(double v) { return format_number(v); }

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> read_kernel_table(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open kernel table");
  std::vector<double> s, d;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (comma == std::string::npos) throw ConfigError(where, "expected s,density");
    const std::string a = trim(line.substr(0, comma)), b = trim(line.substr(comma + 1));
    if (lineno == 1 && !a.empty() && (std::isalpha(static_cast<unsigned char>(a[0])) != 0)) {
      continue;  // header
    }
    s.push_back(to_number(a, where));
    d.push_back(to_number(b, where));
  }
  return {s, d};
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  const auto raw = tokenize(text);
  static const std::set<std::string> known{"model", "hes1",     "cooke",  "delays",
                                           "simulation", "analysis", "output"};
  for (const auto& [name, _] : raw) {
    if (!known.count(name)) throw ConfigError(name, "unknown section");
  }
  const int systems = static_cast<int>(raw.count("model") + raw.count("hes1") + raw.count("cooke"));
  if (systems != 1) {
    throw ConfigError("", systems == 0 ? "config needs one of [model], [hes1] or [cooke]"
                                       : "config must not combine [model], [hes1] and [cooke]");
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  if (raw.count("model")) {
    cfg.model = read_model(SectionReader(
        "model", raw.at("model"),
        {"k", "mu", "alpha", "feedback", "hill.mu", "hill.b", "hill.h", "table_x", "table_y", "slope",
         "intercept"}));
    if (!raw.count("delays")) throw ConfigError("delays", "required with [model]");
  }
  if (raw.count("hes1")) {
    cfg.hes1 = read_hes1(
        SectionReader("hes1", raw.at("hes1"), {"alpha", "k", "h", "beta", "k_r", "k_p", "tau_r"}));
  }
  if (raw.count("cooke")) {
    cfg.cooke = read_cooke(SectionReader("cooke", raw.at("cooke"), {"b", "c", "tau"}));
  }
  if (raw.count("delays")) {
    if (!cfg.model) throw ConfigError("delays", "only valid together with [model]");
    std::set<std::string> keys{"tau"};
    for (int j = 0; j <= cfg.model->k; ++j) {
      const std::string p = j == 0 ? "kernel" : "kernel" + std::to_string(j);
      for (const char* suffix : {"", ".at", ".a", ".b", ".file"}) keys.insert(p + suffix);
    }
    cfg.delays = read_delays(SectionReader("delays", raw.at("delays"), keys), cfg.model->k,
                             base_dir);
  }
  if (raw.count("simulation")) {
    cfg.simulation = read_simulation(SectionReader(
        "simulation", raw.at("simulation"),
        {"t_end", "step", "history", "history_value", "history_bounds", "history_nodes", "seed",
         "mc_runs", "tol", "window"}));
  }
  if (raw.count("analysis")) {
    cfg.analysis = read_analysis(SectionReader(
        "analysis", raw.at("analysis"),
        {"m_max", "samples_per_face", "majorant_nodes", "cone_margin",
         "attractor_tol", "omega_max", "mikhailov_samples"}));
  }
  if (raw.count("output")) {
    SectionReader r("output", raw.at("output"), {"dir", "precision"});
    if (r.has("dir")) cfg.output.dir = r.scalar("dir");
    r.integer_if("precision", cfg.output.precision);
    if (cfg.output.precision < 1 || cfg.output.precision > 17) {
      throw ConfigError("output.precision", "must be in 1..17");
    }
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream o;
  if (cfg.model) {
    const auto& m = *cfg.model;
    o << "[model]\nk = " << m.k << "\nmu = " << fmt_list(m.mu) << "\n";
    if (!m.alpha.empty()) o << "alpha = " << fmt_list(m.alpha) << "\n";
    o << "feedback = " << m.feedback << "\n";
    if (m.feedback == "hill") {
      o << "hill.mu = " << fmt(m.hill[0]) << "\nhill.b = " << fmt(m.hill[1])
        << "\nhill.h = " << fmt(m.hill[2]) << "\n";
    }
    if (m.feedback == "table") {
      o << "table_x = " << fmt_list(m.table_x) << "\ntable_y = " << fmt_list(m.table_y) << "\n";
    }
    if (m.feedback == "affine") {
      o << "slope = " << fmt(m.slope) << "\nintercept = " << fmt(m.intercept) << "\n";
    }
    o << "\n";
  }
  if (cfg.hes1) {
    const auto& p = *cfg.hes1;
    o << "[hes1]\nalpha = " << fmt(p.alpha) << "\nk = " << fmt(p.k_half) << "\nh = " << fmt(p.h)
      << "\nbeta = " << fmt(p.beta) << "\nk_r = " << fmt(p.k_r) << "\nk_p = " << fmt(p.k_p)
      << "\ntau_r = " << fmt(p.tau_r) << "\n\n";
  }
  if (cfg.cooke) {
    o << "[cooke]\nb = " << fmt(cfg.cooke->b) << "\nc = " << fmt(cfg.cooke->c)
      << "\ntau = " << fmt(cfg.cooke->tau) << "\n\n";
  }
  if (cfg.delays) {
    o << "[delays]\ntau = " << fmt(cfg.delays->tau) << "\n";
    for (std::size_t j = 0; j < cfg.delays->kernels.size(); ++j) {
      const auto& e = cfg.delays->kernels[j];
      const std::string p = "kernel" + std::to_string(j + 1);
      o << p << " = " << e.kind << "\n";
      if (e.kind == "dirac") o << p << ".at = " << fmt(e.params[0]) << "\n";
      if (e.kind == "uniform") {
        o << p << ".a = " << fmt(e.params[0]) << "\n" << p << ".b = " << fmt(e.params[1]) << "\n";
      }
      if (e.kind == "table") o << p << ".file = " << e.path << "\n";
    }
    o << "\n";
  }
  const auto& s = cfg.simulation;
  o << "[simulation]\nt_end = " << fmt(s.t_end) << "\nstep = " << fmt(s.step)
    << "\nhistory = " << s.history << "\n";
  if (!s.history_value.empty()) o << "history_value = " << fmt_list(s.history_value) << "\n";
  o << "history_bounds = " << fmt_list(s.history_bounds) << "\nhistory_nodes = " << s.history_nodes
    << "\nseed = " << s.seed << "\nmc_runs = " << s.mc_runs << "\ntol = " << fmt(s.tol)
    << "\nwindow = " << fmt(s.window) << "\n\n";
  const auto& a = cfg.analysis;
  o << "[analysis]\nm_max = " << a.m_max << "\nsamples_per_face = " << a.samples_per_face
    << "\nmajorant_nodes = " << a.majorant_nodes << "\ncone_margin = " << fmt(a.cone_margin)
    << "\nattractor_tol = " << fmt(a.attractor_tol) << "\nomega_max = " << fmt(a.omega_max)
    << "\nmikhailov_samples = " << a.mikhailov_samples << "\n\n";
  o << "[output]\n";
  if (!cfg.output.dir.empty()) o << "dir = " << cfg.output.dir << "\n";
  o << "precision = " << cfg.output.precision << "\n";
  return o.str();
}

CascadeSpec build_cascade(const RunConfig& cfg) {
  if (!cfg.model || !cfg.delays) throw ConfigError("model", "no [model] section");
  const auto& m = *cfg.model;
  CascadeSpec spec;
  spec.k = m.k;
  spec.mu = Eigen::Map<const Vector>(m.mu.data(), static_cast<Eigen::Index>(m.mu.size()));
  spec.alpha = Vector(static_cast<Eigen::Index>(m.alpha.size()));
  for (std::size_t i = 0; i < m.alpha.size(); ++i) spec.alpha(static_cast<Eigen::Index>(i)) = m.alpha[i];
  try {
    if (m.feedback == "hill") {
      spec.feedback = FeedbackFn::hill(m.hill[0], m.hill[1], m.hill[2]);
    } else if (m.feedback == "table") {
      spec.feedback = FeedbackFn::table(m.table_x, m.table_y);
    } else {
      spec.feedback = FeedbackFn::affine(m.slope, m.intercept);
    }
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("model.feedback", ex.what());
  }
  for (std::size_t j = 0; j < cfg.delays->kernels.size(); ++j) {
    spec.kernels.push_back(make_kernel(cfg.delays->kernels[j], cfg.delays->tau, cfg.base_dir,
                                       "delays.kernel" + std::to_string(j + 1)));
  }
  validate(spec);
  return spec;
}

}  // namespace cascade
