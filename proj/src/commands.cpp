#include "cascade/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "cascade/attractor.hpp"
#include "cascade/hill.hpp"

namespace cascade {

namespace {

std::string num(double v, int precision = 17) { return format_number(v, precision); }

std::string opt_num(const std::optional<double>& v, int precision = 17) {
  return v ? num(*v, precision) : std::string();
}

std::string join_notes(const std::vector<std::string>& notes) {
  std::string s;
  for (const auto& n : notes) s += (s.empty() ? "" : ";") + n;
  return s;
}

RunConfig load(const CommandOptions& opts) {
  if (!opts.config) throw ConfigError("", "--config is required for this command");
  return parse_config(*opts.config);
}

int precision_of(const std::optional<RunConfig>& cfg) {
  return cfg ? cfg->output.precision : 17;
}

// CSV to <dir>/<name>.csv when an output directory is configured, else to `out`.
void emit_csv(const CommandOptions& opts, const std::optional<RunConfig>& cfg,
              const std::string& name, const std::string& csv, std::ostream& out,
              std::ostream& log) {
  std::optional<std::filesystem::path> dir = opts.out;
  if (!dir && cfg && !cfg->output.dir.empty()) dir = cfg->base_dir / cfg->output.dir;
  if (!dir) {
    out << csv;
    return;
  }
  std::filesystem::create_directories(*dir);
  const auto path = *dir / (name + ".csv");
  write_file_atomic(path, csv);
  log << "wrote " << path.string() << "\n";
}

std::vector<std::pair<double, double>> bound_pairs(const SimulationSection& s) {
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i + 1 < s.history_bounds.size(); i += 2) {
    pairs.emplace_back(s.history_bounds[i], s.history_bounds[i + 1]);
  }
  return pairs;
}

// Largest distance from the target to the history bounds, per component.
Vector deviation_radius(const RunConfig& cfg, const Vector& target) {
  const auto pairs = bound_pairs(cfg.simulation);
  Vector r(target.size());
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    const auto& [lo, hi] = pairs.size() == 1 ? pairs[0] : pairs.at(static_cast<std::size_t>(j));
    r(j) = std::max(std::abs(lo - target(j)), std::abs(hi - target(j)));
  }
  return r;
}

LinearizationData hes1_linearization(const Hes1Rescaled& sys) {
  LinearizationData lin;
  lin.mu = Vector(2);
  lin.mu << 1.0, sys.mu;
  lin.gamma = Vector(2);
  lin.gamma << hill_jet(1.0, sys.mu, sys.b, sys.h).df, 1.0;
  lin.tau_points = Vector(2);
  (*lin.tau_points) << sys.tau, 0.0;
  return lin;
}

LinearizationData data_from_flags(const CommandOptions& opts) {
  if (opts.mu.empty() || opts.mu.size() != opts.gamma.size()) {
    throw std::invalid_argument("--mu and --gamma must be given with the same length");
  }
  LinearizationData lin;
  lin.mu = Eigen::Map<const Vector>(opts.mu.data(), static_cast<Eigen::Index>(opts.mu.size()));
  lin.gamma =
      Eigen::Map<const Vector>(opts.gamma.data(), static_cast<Eigen::Index>(opts.gamma.size()));
  if (opts.tau) {
    lin.tau_points = Vector::Zero(lin.mu.size());
    (*lin.tau_points)(0) = *opts.tau;
  }
  return lin;
}

std::string report_csv(const StabilityReport& rep) {
  std::ostringstream o;
  o << "Gamma,M,omega0,tau_cr,verdict\n"
    << num(rep.gamma_product) << "," << num(rep.mu_product) << "," << opt_num(rep.omega0) << ","
    << opt_num(rep.tau_cr) << "," << to_string(rep.verdict) << "\n";
  return o.str();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LinearizationData linearize(const CascadeSpec& spec, const SteadyState& ss) {
  LinearizationData lin;
  lin.mu = spec.mu;
  lin.gamma = Vector(spec.k);
  lin.gamma(0) = clamp_extend(spec.feedback).derivative(ss.xbar(spec.k - 1));
  for (int j = 1; j < spec.k; ++j) lin.gamma(j) = spec.alpha(j - 1);
  Vector taus(spec.k);
  for (int j = 0; j < spec.k; ++j) {
    const auto& kern = spec.kernels[static_cast<std::size_t>(j)];
    if (!kern.is_point_mass()) {
      lin.point_delays = false;
      taus(j) = -kern.mean();
    } else {
      taus(j) = -kern.support_supremum();
    }
  }
  if (lin.point_delays) lin.tau_points = taus;
  return lin;
}

Vector cone_slopes(const CascadeSpec& spec, const SteadyState& ss,
                   std::vector<std::string>& notes) {
  Vector alphas(spec.k);
  const double xk = ss.xbar(spec.k - 1);
  if (const auto* hill = spec.feedback.as_hill(); hill != nullptr && hill->h >= 1.0) {
    // In xi = x / xk the feedback is again a normalised Hill with b' = b/xk, mu' = f(xk).
    const double fk = spec.feedback(xk);
    alphas(0) = cone_slope(hill->h, hill->b / xk, fk) / xk;
    notes.push_back("cone_slope_exact_hill");
  } else {
    const double hi = std::max({10.0 * xk, 1.0, spec.feedback.domain().lo + 1.0});
    const double lo = std::max(0.0, spec.feedback.domain().lo);
    alphas(0) = estimate_cone_slope(spec.feedback, xk, lo, hi, 20001);
    notes.push_back("cone_slope_sampled");
  }
  for (int j = 1; j < spec.k; ++j) alphas(j) = spec.alpha(j - 1);
  return alphas;
}

SystemSetup make_system(const RunConfig& cfg) {
  SystemSetup sys;
  const double t_end = cfg.simulation.t_end;
  const double step = cfg.simulation.step;
  if (cfg.hes1) {
    const Hes1Rescaled h = rescale_hes1(*cfg.hes1);
    sys.kind = "hes1";
    sys.k = 2;
    sys.tau = h.tau;
    sys.target = Vector(2);
    sys.target << h.mu, 1.0;
    const CascadeSpec spec = h.spec;
    sys.integrate = [spec, t_end, step](const InitialHistory& phi) {
      return integrate(spec, phi, t_end, step);
    };
  } else if (cfg.model) {
    const CascadeSpec spec = build_cascade(cfg);
    sys.kind = "model";
    sys.k = spec.k;
    sys.tau = spec.tau_max();
    sys.target = steady_state(spec).xbar;
    sys.integrate = [spec, t_end, step](const InitialHistory& phi) {
      return integrate(spec, phi, t_end, step);
    };
  } else {
    const CookeSection c = *cfg.cooke;
    sys.kind = "cooke";
    sys.k = 1;
    sys.tau = c.tau;
    sys.target = Vector::Constant(1, c.b <= c.c ? 0.0 : 1.0 - c.c / c.b);
    const long lag = std::lround(c.tau / step);
    DelayRhs rhs = [c, lag](double, const Vector& x, const DelayedState& past, Vector& dx) {
      dx(0) = c.b * past.at_lag(0, -lag) * (1.0 - x(0)) - c.c * x(0);
    };
    sys.integrate = [rhs, c, t_end, step](const InitialHistory& phi) {
      return integrate_rhs(rhs, 1, c.tau, phi, t_end, step);
    };
  }
  return sys;
}

InitialHistory make_history(const RunConfig& cfg, const SystemSetup& sys, std::uint64_t seed) {
  const auto& s = cfg.simulation;
  if (s.history == "constant") {
    const auto& v = s.history_value;
    if (v.size() != 1 && v.size() != static_cast<std::size_t>(sys.k)) {
      throw ConfigError("simulation.history_value", "expected 1 or k entries");
    }
    Vector x(sys.k);
    for (int j = 0; j < sys.k; ++j) x(j) = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(j)];
    return InitialHistory::constant(x, sys.tau);
  }
  const auto pairs = bound_pairs(s);
  if (pairs.size() != 1 && pairs.size() != static_cast<std::size_t>(sys.k)) {
    throw ConfigError("simulation.history_bounds", "expected 1 or k [lo, hi] pairs");
  }
  return random_history(seed, sys.k, sys.tau, pairs, s.history_nodes);
}

SweepReport run_sweep(const RunConfig& cfg, int runs, std::uint64_t first_seed,
                      unsigned threads) {
  if (runs < 1) throw std::invalid_argument("sweep: runs must be >= 1");
  const SystemSetup sys = make_system(cfg);
  SweepReport rep;
  rep.runs = runs;
  rep.all.resize(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i = next++; i < runs; i = next++) {
      SweepRun& run = rep.all[static_cast<std::size_t>(i)];
      run.seed = first_seed + static_cast<std::uint64_t>(i);
      try {
        const Trajectory traj = sys.integrate(make_history(cfg, sys, run.seed));
        const auto v = check_convergence(traj, sys.target, cfg.simulation.tol, cfg.simulation.window);
        run.converged = v.converged;
        run.deviation = v.sup_deviation;
      } catch (const std::exception& ex) {
        run.converged = false;
        run.deviation = std::numeric_limits<double>::infinity();
        run.error = ex.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& run : rep.all) {
    rep.worst_deviation = std::max(rep.worst_deviation, run.deviation);
    if (run.converged) {
      ++rep.converged;
    } else {
      rep.failures.push_back(run);
    }
  }
  return rep;
}

bool certified_stable(const RunConfig& cfg, std::string& reason) {
  if (cfg.hes1) {
    const auto rep = check_hes1_global(*cfg.hes1);
    reason = to_string(rep.verdict) + " (" + join_notes(rep.notes) + ")";
    return rep.verdict == Verdict::GloballyStable;
  }
  if (cfg.cooke) {
    const bool ok = cfg.cooke->b < cfg.cooke->c;
    reason = ok ? "b < c" : "b >= c (strict b < c required)";
    return ok;
  }
  const CascadeSpec spec = build_cascade(cfg);
  const SteadyState ss = steady_state(spec);
  std::vector<std::string> notes;
  const Vector alphas = cone_slopes(spec, ss, notes);
  const auto rep = classify(linearize(spec, ss), alphas);
  notes.insert(notes.end(), rep.notes.begin(), rep.notes.end());
  reason = to_string(rep.verdict) + " (" + join_notes(notes) + ")";
  return rep.verdict == Verdict::GloballyStable;
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const RunConfig cfg = load(opts);
  const SystemSetup sys = make_system(cfg);
  const std::uint64_t seed = opts.seed.value_or(cfg.simulation.seed);
  const Trajectory traj = sys.integrate(make_history(cfg, sys, seed));
  std::ostringstream csv;
  write_csv(csv, traj, cfg.output.precision);
  emit_csv(opts, cfg, "trajectory", csv.str(), out, log);
  log << "simulated " << sys.kind << " to t = " << traj.t_end() << " (" << traj.size()
      << " nodes), max deviation from steady state at end "
      << (traj.final_state() - sys.target).cwiseAbs().maxCoeff() << "\n";
  return kExitOk;
}

int cmd_check_stability(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  StabilityReport rep;
  std::optional<RunConfig> cfg;
  if (!opts.mu.empty() || !opts.gamma.empty()) {
    rep = classify(data_from_flags(opts));
  } else {
    cfg = load(opts);
    if (cfg->hes1) {
      rep = check_hes1_global(*cfg->hes1);
    } else if (cfg->model) {
      const CascadeSpec spec = build_cascade(*cfg);
      const SteadyState ss = steady_state(spec);
      std::vector<std::string> notes;
      const Vector alphas = cone_slopes(spec, ss, notes);
      const LinearizationData lin = linearize(spec, ss);
      rep = classify(lin, alphas);
      rep.notes.insert(rep.notes.end(), notes.begin(), notes.end());
      try {
        const double wmax = std::max(cfg->analysis.omega_max, 2000.0 * lin.mu.sum());
        const auto mk = mikhailov_argument(lin, spec.kernels, wmax, cfg->analysis.mikhailov_samples);
        rep.notes.push_back(std::string("mikhailov_") + (mk.stable ? "stable" : "unstable"));
      } catch (const std::exception&) {
        rep.notes.push_back("mikhailov_unavailable");
      }
    } else {
      throw ConfigError("cooke", "check-stability needs [model] or [hes1]");
    }
  }
  out << "verdict: " << to_string(rep.verdict);
  if (!rep.notes.empty()) out << " (" << join_notes(rep.notes) << ")";
  out << "\n" << report_csv(rep);
  if (opts.out) emit_csv(opts, cfg, "stability", report_csv(rep), out, log);
  return rep.verdict == Verdict::GloballyStable ? kExitOk : kExitNegative;
}

int cmd_check_hes1(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const RunConfig cfg = load(opts);
  if (!cfg.hes1) throw ConfigError("hes1", "check-hes1 needs a [hes1] section");
  const auto rep = check_hes1_global(*cfg.hes1);
  const Hes1Rescaled sys = rescale_hes1(*cfg.hes1);
  const HillAnalysis an = x0_root(sys.h, sys.b, sys.mu);
  std::ostringstream csv;
  csv << "ratio,threshold,b,cone_slope,case,Gamma,M,omega0,tau_cr,verdict\n"
      << num(hes1_ratio(*cfg.hes1)) << "," << num(region_threshold(sys.h)) << "," << num(sys.b)
      << "," << num(an.cone_slope) << "," << to_string(an.kase) << "," << num(rep.gamma_product)
      << "," << num(rep.mu_product) << "," << opt_num(rep.omega0) << "," << opt_num(rep.tau_cr)
      << "," << to_string(rep.verdict) << "\n";
  out << "verdict: " << to_string(rep.verdict) << " (" << join_notes(rep.notes) << ")\n"
      << csv.str();
  if (opts.out) emit_csv(opts, cfg, "hes1", csv.str(), out, log);
  return rep.verdict == Verdict::GloballyStable ? kExitOk : kExitNegative;
}

int cmd_hopf(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  LinearizationData lin;
  std::optional<RunConfig> cfg;
  if (!opts.mu.empty() || !opts.gamma.empty()) {
    lin = data_from_flags(opts);
  } else {
    cfg = load(opts);
    if (cfg->hes1) {
      lin = hes1_linearization(rescale_hes1(*cfg->hes1));
    } else if (cfg->model) {
      const CascadeSpec spec = build_cascade(*cfg);
      lin = linearize(spec, steady_state(spec));
    } else {
      throw ConfigError("cooke", "hopf needs [model], [hes1] or --mu/--gamma");
    }
  }
  const StabilityReport rep = classify(lin);
  out << "verdict: " << to_string(rep.verdict);
  if (!rep.notes.empty()) out << " (" << join_notes(rep.notes) << ")";
  out << "\n" << report_csv(rep);
  if (opts.out) emit_csv(opts, cfg, "hopf", report_csv(rep), out, log);
  return rep.verdict == Verdict::HopfBoundary ? kExitOk : kExitNegative;
}

int cmd_region(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  std::optional<RunConfig> cfg;
  if (opts.config) cfg = load(opts);
  RegionCurve curve;
  if (opts.h_min || opts.h_max || opts.points) {
    const double lo = opts.h_min.value_or(1.0);
    const double hi = opts.h_max.value_or(10.0);
    const int n = opts.points.value_or(static_cast<int>(std::lround((hi - lo) / 0.2)) + 1);
    curve = region_curve(lo, hi, n);
  } else {
    curve = region_curve(default_region_grid());
  }
  const int p = precision_of(cfg);
  std::ostringstream csv;
  csv << "h,threshold\n";
  for (std::size_t i = 0; i < curve.h_grid.size(); ++i) {
    csv << num(curve.h_grid[i], p) << "," << num(curve.thresholds[i], p) << "\n";
  }
  emit_csv(opts, cfg, "region_curve", csv.str(), out, log);
  return kExitOk;
}

int cmd_attractor(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const RunConfig cfg = load(opts);
  const double margin = cfg.analysis.cone_margin;
  CycleMap map;
  Vector k_radius;
  if (cfg.hes1) {
    const Hes1Rescaled sys = rescale_hes1(*cfg.hes1);
    map = hes1_cycle_map(sys.mu, sys.b, sys.h, margin);
    // One component: the protein deviation from 1.
    Vector target(2);
    target << sys.mu, 1.0;
    k_radius = deviation_radius(cfg, target).tail(1);
  } else if (cfg.model) {
    const CascadeSpec spec = build_cascade(cfg);
    const SteadyState ss = steady_state(spec);
    std::vector<std::string> notes;
    const Vector alphas = cone_slopes(spec, ss, notes);
    map = cascade_cycle_map(spec, ss.xbar, alphas(0), margin);
    k_radius = deviation_radius(cfg, ss.xbar);
  } else {
    // On the absorbing set [0, 1]: |b x(t - tau)(1 - x)| <= b |x(t - tau)|.
    const double beta = cfg.cooke->b / cfg.cooke->c;
    map.h = {[beta](double y) { return beta * y; }};
    map.betas = Vector::Constant(1, beta);
    map.monotone = {true};
    k_radius = deviation_radius(cfg, Vector::Zero(1)).cwiseMin(1.0);
  }
  BoxSequence boxes;
  try {
    boxes = box_sequence(map, k_radius, cfg.analysis.m_max, cfg.analysis.majorant_nodes);
  } catch (const std::invalid_argument& ex) {
    log << "certification failed: " << ex.what() << "\n";
    return kExitNegative;
  }
  const AttractorReport rep = verify_strong_attractor(map, boxes, k_radius,
                                                      cfg.analysis.samples_per_face,
                                                      cfg.analysis.attractor_tol);
  const int p = cfg.output.precision;
  std::ostringstream csv;
  csv << "m";
  for (int j = 1; j <= map.k(); ++j) csv << ",a_" << j;
  csv << "\n";
  for (int m = 0; m < boxes.m_max(); ++m) {
    csv << (m + 1);
    for (int j = 0; j < map.k(); ++j) csv << "," << num(boxes.radii(j, m), p);
    csv << "\n";
  }
  emit_csv(opts, cfg, "attractor", csv.str(), out, log);
  log << "B1 " << (rep.b1.passed ? "pass" : "FAIL") << ": " << rep.b1.detail << "\n"
      << "B2 " << (rep.b2.passed ? "pass" : "FAIL") << ": " << rep.b2.detail << "\n"
      << "B3 " << (rep.b3.passed ? "pass" : "FAIL") << ": " << rep.b3.detail << "\n"
      << "note: " << rep.caveat << "\n";
  return rep.passed() ? kExitOk : kExitNegative;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const RunConfig cfg = load(opts);
  std::string reason;
  const bool certified = certified_stable(cfg, reason);
  if (!certified && !opts.force) {
    log << "parameters not certified globally stable: " << reason << "; use --force to sweep\n";
    return kExitNegative;
  }
  const int runs = opts.runs.value_or(cfg.simulation.mc_runs);
  const std::uint64_t first = opts.seed.value_or(cfg.simulation.seed);
  const SweepReport rep = run_sweep(cfg, runs, first);
  std::ostringstream csv;
  csv << "seed,converged,sup_deviation\n";
  for (const auto& run : rep.all) {
    csv << run.seed << "," << (run.converged ? 1 : 0) << "," << num(run.deviation, cfg.output.precision)
        << "\n";
  }
  emit_csv(opts, cfg, "sweep", csv.str(), out, log);
  log << "certification: " << reason << "\n"
      << "converged " << rep.converged << "/" << rep.runs << ", worst deviation "
      << rep.worst_deviation << "\n";
  for (const auto& f : rep.failures) {
    if (!f.error.empty()) log << "seed " << f.seed << ": " << f.error << "\n";
  }
  return rep.converged == rep.runs ? kExitOk : kExitNegative;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out,
                std::ostream& log) {
  try {
    if (name == "simulate") return cmd_simulate(opts, out, log);
    if (name == "check-stability") return cmd_check_stability(opts, out, log);
    if (name == "check-hes1") return cmd_check_hes1(opts, out, log);
    if (name == "hopf") return cmd_hopf(opts, out, log);
    if (name == "region-curve") return cmd_region(opts, out, log);
    if (name == "attractor") return cmd_attractor(opts, out, log);
    if (name == "sweep") return cmd_sweep(opts, out, log);
    log << "error: unknown command '" << name << "'\n";
  } catch (const std::exception& ex) {
    log << "error: " << ex.what() << "\n";
  }
  return kExitError;
}

}  // namespace cascade
