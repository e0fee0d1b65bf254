#ifndef CASCADE_SOLVER_HPP
#define CASCADE_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cascade/kernels.hpp"
#include "cascade/model.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// Initial function phi on [-tau, 0], piecewise linear through the samples.
/// values.col(i) is the state at offsets[i]; offsets increase and end at 0.
struct InitialHistory {
  std::vector<double> offsets;
  Matrix values;

  static InitialHistory constant(const Vector& value, double tau);
  int dimension() const { return static_cast<int>(values.rows()); }
  Vector at(double s) const;
};

/// Dense solution: the initial function before t0 and (state, derivative)
/// pairs on a uniform grid from t0, interpolated by cubic Hermite.
class History {
 public:
  History(double t0, double step, InitialHistory phi);

  double t0() const noexcept { return t0_; }
  double step() const noexcept { return step_; }
  int dimension() const noexcept { return k_; }
  /// Number of grid nodes at or after t0.
  long size() const noexcept { return static_cast<long>(states_.size()) / k_; }
  double time(long i) const noexcept { return t0_ + static_cast<double>(i) * step_; }
  double latest_time() const noexcept { return time(size() - 1); }
  const InitialHistory& initial() const noexcept { return phi_; }

  Eigen::Map<const Vector> state(long i) const {
    return Eigen::Map<const Vector>(states_.data() + i * k_, k_);
  }
  Eigen::Map<const Vector> derivative(long i) const {
    return Eigen::Map<const Vector>(derivs_.data() + i * k_, k_);
  }

  /// x(t) for t in [t0 - tau, latest node]; std::out_of_range otherwise.
  Vector at(double t) const;

  /// Component j at grid position (index + frac) * step relative to t0, with
  /// frac in [0, 1]. Negative positions read the initial function.
  double value_at_position(int j, long index, double frac) const;

  void push(const Vector& state);
  void set_derivative(long i, const Vector& d);

 private:
  double t0_;
  double step_;
  int k_;
  InitialHistory phi_;
  std::vector<double> states_;
  std::vector<double> derivs_;
};

/// View of the past handed to a right-hand side at one stage time.
class DelayedState {
 public:
  DelayedState(const History& hist, long node, double frac, const Vector& stage)
      : hist_(hist), node_(node), frac_(frac), stage_(stage) {}

  /// x_j(t_stage + lag * step) for an integer lag <= 0; lag 0 is the current
  /// stage value.
  double at_lag(int j, long lag) const {
    if (lag == 0) return stage_(j);
    return hist_.value_at_position(j, node_ + lag, frac_);
  }

  /// x_j(t_stage + s) for an arbitrary offset s <= 0.
  double at_offset(int j, double s) const;

  double step() const noexcept { return hist_.step(); }

 private:
  const History& hist_;
  long node_;
  double frac_;
  const Vector& stage_;
};

/// dx = F(t, x(t), past). Must not retain references past the call.
using DelayRhs = std::function<void(double t, const Vector& x, const DelayedState& past, Vector& dx)>;

struct TrajectoryMeta {
  std::string spec_hash;
  std::vector<QuadratureRule> rules;
};

struct Trajectory {
  History history;
  double step;
  TrajectoryMeta meta;

  double t0() const { return history.t0(); }
  double t_end() const { return history.latest_time(); }
  long size() const { return history.size(); }
  Vector final_state() const { return history.state(size() - 1); }

  /// Wraps uniformly sampled states (columns) as a trajectory, derivatives by
  /// finite differences. Used for synthetic signals.
  static Trajectory from_samples(double t0, double step, const Matrix& states);
};

struct IntegrateOptions {
  double t0 = 0.0;
  /// Runtime check that states stay >= -positivity_tol (pathway models with
  /// nonnegative data); never clamps.
  bool check_positivity = true;
  double positivity_tol = 1e-9;
};

/// Classic RK4 by the method of steps for an arbitrary delayed right-hand
/// side. Requires step | tau_max (or tau_max == 0). Throws BlowUpError on a
/// non-finite state, std::invalid_argument on bad inputs.
Trajectory integrate_rhs(const DelayRhs& rhs, int k, double tau_max, const InitialHistory& phi,
                         double t_end, double step, double t0 = 0.0);

/// Integrates the cascade with its kernels discretised on the step grid; the
/// feedback is evaluated through clamp_extend.
Trajectory integrate(const CascadeSpec& spec, const InitialHistory& phi, double t_end,
                     double step, const IntegrateOptions& opts = {});

struct ConvergenceVerdict {
  bool converged = false;
  double sup_deviation = 0.0;
  double window = 0.0;
};

/// sup over the trailing window of max_j |x_j(t) - target_j| against tol.
ConvergenceVerdict check_convergence(const Trajectory& traj, const Vector& target, double tol,
                                     double window);

struct OscillationMetrics {
  Vector amplitude;
  std::optional<double> period;
  int mean_crossings = 0;
};

/// Half peak-to-peak per component over the trailing window and the mean
/// spacing of upward mean crossings of the most oscillatory component.
OscillationMetrics oscillation_metrics(const Trajectory& traj, double window);

/// Piecewise-linear phi with i.i.d. uniform node values in the bounds (one
/// pair per component, or a single pair for all). Deterministic in seed.
InitialHistory random_history(std::uint64_t seed, int k, double tau,
                              const std::vector<std::pair<double, double>>& bounds, int nodes);

/// CSV with header t,x1,...,xk, fixed %.{precision}g.
void write_csv(std::ostream& os, const Trajectory& traj, int precision = 17);

/// %.{precision}g, except that 17 gives the shortest string that round-trips.
std::string format_number(double v, int precision = 17);

/// Stable textual fingerprint of a cascade, hashed.
std::string spec_hash(const CascadeSpec& spec);

}  // namespace cascade

#endif  // CASCADE_SOLVER_HPP
