#include "cascade/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cascade {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

bool divides(double step, double tau) {
  if (tau == 0.0) return true;
  const double q = tau / step;
  return std::abs(q - std::round(q)) <= 1e-8 && std::round(q) >= 1.0;
}

void check_phi(const InitialHistory& phi, int k, double tau_max) {
  if (phi.dimension() != k) invalid("initial history has wrong dimension");
  if (phi.offsets.empty() || static_cast<Eigen::Index>(phi.offsets.size()) != phi.values.cols()) {
    invalid("initial history needs one column per offset");
  }
  if (phi.offsets.back() != 0.0) invalid("initial history must end at offset 0");
  if (phi.offsets.front() > -tau_max + 1e-12 * std::max(1.0, tau_max)) {
    invalid("initial history does not cover [-tau, 0]");
  }
  for (std::size_t i = 1; i < phi.offsets.size(); ++i) {
    if (!(phi.offsets[i] > phi.offsets[i - 1])) invalid("initial history offsets must increase");
  }
  if (!phi.values.allFinite()) invalid("initial history is not finite");
}

// Upward crossings of `level` located by linear interpolation.
std::vector<double> upward_crossings(const std::vector<double>& ts, const std::vector<double>& xs,
                                     double level, int& total) {
  std::vector<double> out;
  total = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double a = xs[i - 1] - level, b = xs[i] - level;
    if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
      ++total;
      if (a < 0.0) out.push_back(ts[i - 1] + (ts[i] - ts[i - 1]) * (-a) / (b - a));
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

InitialHistory InitialHistory::constant(const Vector& value, double tau) {
  InitialHistory phi;
  if (tau > 0.0) {
    phi.offsets = {-tau, 0.0};
    phi.values = Matrix(value.size(), 2);
    phi.values.col(0) = value;
    phi.values.col(1) = value;
  } else {
    phi.offsets = {0.0};
    phi.values = value;
  }
  return phi;
}

Vector InitialHistory::at(double s) const {
  if (offsets.size() == 1 || s <= offsets.front()) return values.col(0);
  if (s >= offsets.back()) return values.col(values.cols() - 1);
  auto it = std::upper_bound(offsets.begin(), offsets.end(), s);
  const auto i = static_cast<Eigen::Index>(it - offsets.begin());
  const double s0 = offsets[static_cast<std::size_t>(i - 1)];
  const double s1 = offsets[static_cast<std::size_t>(i)];
  const double w = (s - s0) / (s1 - s0);
  return (1.0 - w) * values.col(i - 1) + w * values.col(i);
}

History::History(double t0, double step, InitialHistory phi)
    : t0_(t0), step_(step), k_(phi.dimension()), phi_(std::move(phi)) {
  if (!(step_ > 0.0)) invalid("history step must be positive");
  if (k_ < 1) invalid("history dimension must be >= 1");
}

void History::push(const Vector& state) {
  states_.insert(states_.end(), state.data(), state.data() + k_);
  derivs_.insert(derivs_.end(), static_cast<std::size_t>(k_), 0.0);
}

void History::set_derivative(long i, const Vector& d) {
  std::copy(d.data(), d.data() + k_, derivs_.begin() + i * k_);
}

double History::value_at_position(int j, long index, double frac) const {
  if (frac >= 1.0) {
    index += 1;
    frac = 0.0;
  }
  if (index < 0) {
    // Inside the initial function; positions are relative to t0.
    const double s = (static_cast<double>(index) + frac) * step_;
    const double lo = phi_.offsets.front();
    return phi_.at(std::max(s, lo))(j);
  }
  const long n = size();
  if (frac == 0.0) {
    if (index >= n) throw std::out_of_range("history lookup beyond latest node");
    return states_[static_cast<std::size_t>(index * k_ + j)];
  }
  if (index + 1 >= n) throw std::out_of_range("history lookup beyond latest node");
  const auto base = static_cast<std::size_t>(index * k_ + j);
  const auto next = base + static_cast<std::size_t>(k_);
  const double th = frac;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
  const double h10 = th3 - 2.0 * th2 + th;
  const double h01 = -2.0 * th3 + 3.0 * th2;
  const double h11 = th3 - th2;
  return h00 * states_[base] + h10 * step_ * derivs_[base] + h01 * states_[next] +
         h11 * step_ * derivs_[next];
}

Vector History::at(double t) const {
  const double u = (t - t0_) / step_;
  Vector out(k_);
  if (u < 0.0) {
    const double s = t - t0_;
    if (s < phi_.offsets.front() - 1e-12 * std::max(1.0, std::abs(s))) {
      throw std::out_of_range("history query before t0 - tau");
    }
    return phi_.at(s);
  }
  const double last = static_cast<double>(size() - 1);
  if (u > last + 1e-9) throw std::out_of_range("history query after latest node");
  double p = std::floor(u);
  double frac = u - p;
  if (p >= last) {
    p = last;
    frac = 0.0;
  }
  for (int j = 0; j < k_; ++j) out(j) = value_at_position(j, static_cast<long>(p), frac);
  return out;
}

double DelayedState::at_offset(int j, double s) const {
  if (s == 0.0) return stage_(j);
  const double pos = static_cast<double>(node_) + frac_ + s / hist_.step();
  if (pos > static_cast<double>(node_) + 1e-12) {
    throw std::invalid_argument("delayed lookup falls inside the current step");
  }
  const double p = std::floor(pos);
  return hist_.value_at_position(j, static_cast<long>(p), pos - p);
}

Trajectory Trajectory::from_samples(double t0, double step, const Matrix& states) {
  const Eigen::Index k = states.rows(), n = states.cols();
  if (n < 2) invalid("need at least two samples");
  Trajectory traj{History(t0, step, InitialHistory::constant(states.col(0), 0.0)), step, {}};
  for (Eigen::Index i = 0; i < n; ++i) traj.history.push(states.col(i));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index a = std::max<Eigen::Index>(i - 1, 0);
    const Eigen::Index b = std::min<Eigen::Index>(i + 1, n - 1);
    Vector d = (states.col(b) - states.col(a)) / (static_cast<double>(b - a) * step);
    traj.history.set_derivative(static_cast<long>(i), d);
  }
  (void)k;
  return traj;
}

Trajectory integrate_rhs(const DelayRhs& rhs, int k, double tau_max, const InitialHistory& phi,
                         double t_end, double step, double t0) {
  if (!(step > 0.0) || !std::isfinite(step)) invalid("step must be positive");
  if (!divides(step, tau_max)) {
    std::ostringstream msg;
    msg << "step " << step << " does not divide tau_max " << tau_max;
    invalid(msg.str());
  }
  if (!(t_end > t0)) invalid("t_end must exceed t0");
  check_phi(phi, k, tau_max);

  const long n_steps = static_cast<long>(std::ceil((t_end - t0) / step - 1e-9));
  Trajectory traj{History(t0, step, phi), step, {}};
  History& hist = traj.history;
  Vector x = phi.values.col(phi.values.cols() - 1);
  hist.push(x);

  Vector k1(k), k2(k), k3(k), k4(k), stage(k);
  const double half = 0.5 * step;
  for (long n = 0; n < n_steps; ++n) {
    const double t = t0 + static_cast<double>(n) * step;
    rhs(t, x, DelayedState(hist, n, 0.0, x), k1);
    hist.set_derivative(n, k1);
    stage = x + half * k1;
    rhs(t + half, stage, DelayedState(hist, n, 0.5, stage), k2);
    stage = x + half * k2;
    rhs(t + half, stage, DelayedState(hist, n, 0.5, stage), k3);
    stage = x + step * k3;
    rhs(t + step, stage, DelayedState(hist, n, 1.0, stage), k4);
    x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at t = " << (t + step);
      throw BlowUpError(t + step, msg.str());
    }
    hist.push(x);
  }
  rhs(t0 + static_cast<double>(n_steps) * step, x, DelayedState(hist, n_steps, 0.0, x), k1);
  hist.set_derivative(n_steps, k1);
  return traj;
}

namespace {

bool feedback_nonnegative(const FeedbackFn& f) {
  return std::visit(
      [&](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HillFeedback>) {
          return true;
        } else if constexpr (std::is_same_v<T, TableFeedback>) {
          return *std::min_element(v.ys.begin(), v.ys.end()) >= 0.0;
        } else {
          const Interval d = f.domain();
          const double lo_val = v.slope * d.lo + v.intercept;
          if (!std::isfinite(d.hi)) return v.slope >= 0.0 && lo_val >= 0.0;
          return lo_val >= 0.0 && v.slope * d.hi + v.intercept >= 0.0;
        }
      },
      f.variant());
}

}  // namespace

Trajectory integrate(const CascadeSpec& spec, const InitialHistory& phi, double t_end, double step,
                     const IntegrateOptions& opts) {
  validate(spec);
  const int k = spec.k;
  std::vector<QuadratureRule> rules;
  rules.reserve(spec.kernels.size());
  for (const auto& kern : spec.kernels) rules.push_back(discretize(kern, step));

  const FeedbackFn f = clamp_extend(spec.feedback);
  const Vector mu = spec.mu;
  const Vector alpha = spec.alpha;
  DelayRhs rhs = [&](double, const Vector& x, const DelayedState& past, Vector& dx) {
    for (int j = 0; j < k; ++j) {
      const int up = (j + k - 1) % k;
      const QuadratureRule& rule = rules[static_cast<std::size_t>(j)];
      double prod = 0.0;
      if (j == 0) {
        for (std::size_t i = 0; i < rule.size(); ++i) {
          prod += rule.weights[i] * f(past.at_lag(up, rule.grid_index[i]));
        }
      } else {
        for (std::size_t i = 0; i < rule.size(); ++i) {
          prod += rule.weights[i] * past.at_lag(up, rule.grid_index[i]);
        }
        prod *= alpha(j - 1);
      }
      dx(j) = prod - mu(j) * x(j);
    }
  };

  const bool positivity = opts.check_positivity && phi.values.minCoeff() >= 0.0 &&
                          feedback_nonnegative(spec.feedback);
  Trajectory traj = integrate_rhs(rhs, k, spec.tau_max(), phi, t_end, step, opts.t0);
  if (positivity) {
    for (long i = 0; i < traj.size(); ++i) {
      if (traj.history.state(i).minCoeff() < -opts.positivity_tol) {
        std::ostringstream msg;
        msg << "positivity violated at t = " << traj.history.time(i);
        throw std::runtime_error(msg.str());
      }
    }
  }
  traj.meta.spec_hash = spec_hash(spec);
  traj.meta.rules = std::move(rules);
  return traj;
}

ConvergenceVerdict check_convergence(const Trajectory& traj, const Vector& target, double tol,
                                     double window) {
  const double span = traj.t_end() - traj.t0();
  if (!(window >= 0.0) || window > span + 1e-12 * std::max(1.0, span)) {
    invalid("convergence window longer than the trajectory");
  }
  if (target.size() != traj.history.dimension()) invalid("target has wrong dimension");
  const double t_from = traj.t_end() - window;
  ConvergenceVerdict v;
  v.window = window;
  for (long i = traj.size() - 1; i >= 0; --i) {
    if (traj.history.time(i) < t_from - 1e-12 * std::max(1.0, std::abs(t_from))) break;
    v.sup_deviation =
        std::max(v.sup_deviation, (traj.history.state(i) - target).cwiseAbs().maxCoeff());
  }
  v.converged = v.sup_deviation <= tol;
  return v;
}

OscillationMetrics oscillation_metrics(const Trajectory& traj, double window) {
  const double span = traj.t_end() - traj.t0();
  if (!(window > 0.0) || window > span + 1e-12 * std::max(1.0, span)) {
    invalid("oscillation window longer than the trajectory");
  }
  const int k = traj.history.dimension();
  const double t_from = traj.t_end() - window;
  std::vector<double> ts;
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(k));
  for (long i = 0; i < traj.size(); ++i) {
    const double t = traj.history.time(i);
    if (t < t_from - 1e-12 * std::max(1.0, std::abs(t_from))) continue;
    ts.push_back(t);
    const auto s = traj.history.state(i);
    for (int j = 0; j < k; ++j) xs[static_cast<std::size_t>(j)].push_back(s(j));
  }
  OscillationMetrics m;
  m.amplitude = Vector::Zero(k);
  int best = 0;
  for (int j = 0; j < k; ++j) {
    const auto& c = xs[static_cast<std::size_t>(j)];
    const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
    m.amplitude(j) = 0.5 * (*mx - *mn);
    if (m.amplitude(j) > m.amplitude(best)) best = j;
  }
  if (m.amplitude(best) <= 0.0) return m;
  const auto& c = xs[static_cast<std::size_t>(best)];
  double mean = 0.0;
  for (double v : c) mean += v;
  mean /= static_cast<double>(c.size());
  const auto ups = upward_crossings(ts, c, mean, m.mean_crossings);
  if (m.mean_crossings >= 4 && ups.size() >= 2) {
    m.period = (ups.back() - ups.front()) / static_cast<double>(ups.size() - 1);
  }
  return m;
}

InitialHistory random_history(std::uint64_t seed, int k, double tau,
                              const std::vector<std::pair<double, double>>& bounds, int nodes) {
  if (nodes < 2) invalid("random history needs >= 2 nodes");
  if (bounds.empty() || (bounds.size() != 1 && bounds.size() != static_cast<std::size_t>(k))) {
    invalid("random history needs one bound pair or one per component");
  }
  for (const auto& [lo, hi] : bounds) {
    if (!(lo <= hi)) invalid("random history bounds are empty");
  }
  std::mt19937_64 gen(seed);
  InitialHistory phi;
  const int n = tau > 0.0 ? nodes : 1;
  phi.values = Matrix(k, n);
  for (int i = 0; i < n; ++i) {
    phi.offsets.push_back(n == 1 ? 0.0 : -tau + tau * static_cast<double>(i) / (n - 1));
    for (int j = 0; j < k; ++j) {
      const auto& [lo, hi] = bounds.size() == 1 ? bounds[0] : bounds[static_cast<std::size_t>(j)];
      std::uniform_real_distribution<double> dist(lo, hi);
      phi.values(j, i) = lo == hi ? lo : dist(gen);
    }
  }
  phi.offsets.back() = 0.0;
  return phi;
}

std::string format_number(double v, int precision) {
  char buf[40];
  if (precision >= 17) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

void write_csv(std::ostream& os, const Trajectory& traj, int precision) {
  const int k = traj.history.dimension();
  os << "t";
  for (int j = 1; j <= k; ++j) os << ",x" << j;
  os << "\n";
  char buf[32];
  for (long i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, traj.history.time(i));
    os << buf;
    const auto s = traj.history.state(i);
    for (int j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.*g", precision, s(j));
      os << "," << buf;
    }
    os << "\n";
  }
}

std::string spec_hash(const CascadeSpec& spec) {
  std::ostringstream s;
  s << std::setprecision(17) << "k=" << spec.k << ";mu=";
  for (Eigen::Index j = 0; j < spec.mu.size(); ++j) s << spec.mu(j) << ",";
  s << ";alpha=";
  for (Eigen::Index j = 0; j < spec.alpha.size(); ++j) s << spec.alpha(j) << ",";
  s << ";f=";
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HillFeedback>) {
          s << "hill:" << v.mu << ":" << v.b << ":" << v.h;
        } else if constexpr (std::is_same_v<T, TableFeedback>) {
          s << "table:";
          for (std::size_t i = 0; i < v.xs.size(); ++i) s << v.xs[i] << "/" << v.ys[i] << ",";
        } else {
          s << "affine:" << v.slope << ":" << v.intercept;
        }
      },
      spec.feedback.variant());
  s << ";kernels=";
  for (const auto& kern : spec.kernels) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Dirac>) {
            s << "dirac:" << v.at;
          } else if constexpr (std::is_same_v<T, Uniform>) {
            s << "uniform:" << v.a << ":" << v.b;
          } else {
            s << "table:";
            for (std::size_t i = 0; i < v.nodes.size(); ++i) {
              s << v.nodes[i] << "/" << v.densities[i] << ",";
            }
          }
        },
        kern.variant());
    s << "|tau=" << kern.tau_max() << ";";
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

}  // namespace cascade
