#ifndef CASCADE_MODEL_HPP
#define CASCADE_MODEL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "cascade/kernels.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// f(xi) = mu (b^h + 1) / (b^h + xi^h); normalised so that f(1) = mu.
struct HillFeedback {
  double mu;
  double b;
  double h;
  bool operator==(const HillFeedback&) const = default;
};

/// Piecewise-linear curve through (xs[i], ys[i]).
struct TableFeedback {
  std::vector<double> xs;
  std::vector<double> ys;
  bool operator==(const TableFeedback&) const = default;
};

struct AffineFeedback {
  double slope;
  double intercept;
  bool operator==(const AffineFeedback&) const = default;
};

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

/// The nonlinearity feeding x_k back into x_1.
class FeedbackFn {
 public:
  using Variant = std::variant<HillFeedback, TableFeedback, AffineFeedback>;

  static FeedbackFn hill(double mu, double b, double h);
  static FeedbackFn table(std::vector<double> xs, std::vector<double> ys);
  static FeedbackFn affine(double slope, double intercept,
                           Interval domain = {0.0, std::numeric_limits<double>::infinity()});

  /// Throws std::domain_error outside the domain unless the function has been
  /// extended with clamp_extend().
  double operator()(double x) const;
  double derivative(double x) const;

  const Variant& variant() const noexcept { return variant_; }
  Interval domain() const noexcept { return domain_; }
  bool is_extended() const noexcept { return extended_; }
  const HillFeedback* as_hill() const noexcept { return std::get_if<HillFeedback>(&variant_); }

  bool operator==(const FeedbackFn&) const = default;

 private:
  FeedbackFn(Variant v, Interval domain);
  double eval_inside(double x) const;
  double clamp_arg(double x) const;

  friend FeedbackFn clamp_extend(const FeedbackFn& f);

  Variant variant_;
  Interval domain_;
  bool extended_ = false;
};

/// Extends f by the constants f(lo) below and f(hi) above its domain.
FeedbackFn clamp_extend(const FeedbackFn& f);

/// Value and first two derivatives of a Hill feedback.
template <typename Scalar>
struct HillJet {
  Scalar f;
  Scalar df;
  Scalar d2f;
  /// d2f is the one-sided limit -inf at xi = 0 (happens for 1 < h < 2).
  bool d2f_unbounded = false;
};

template <typename Scalar>
HillJet<Scalar> hill_jet(Scalar xi, Scalar mu, Scalar b, Scalar h) {
  using std::pow;
  const Scalar bh = pow(b, h);
  const Scalar xh = pow(xi, h);
  const Scalar den = bh + xh;
  HillJet<Scalar> jet;
  jet.f = mu * (bh + Scalar(1)) / den;
  jet.df = -mu * (bh + Scalar(1)) * h * pow(xi, h - Scalar(1)) / (den * den);
  // xi^{h-2} ((1+h) xi^h - b^h (h-1)), expanded so that h = 1 stays finite.
  const Scalar lead = (Scalar(1) + h) * pow(xi, Scalar(2) * h - Scalar(2));
  Scalar tail = Scalar(0);
  if (h != Scalar(1)) {
    if (xi == Scalar(0) && h < Scalar(2)) {
      jet.d2f = -std::numeric_limits<Scalar>::infinity();
      jet.d2f_unbounded = true;
      return jet;
    }
    tail = bh * (h - Scalar(1)) * pow(xi, h - Scalar(2));
  }
  jet.d2f = mu * h * (bh + Scalar(1)) * (lead - tail) / (den * den * den);
  return jet;
}

/// Closed-form f, f', f'' of a Hill feedback. Throws std::domain_error for
/// xi < 0 or a non-Hill feedback, std::invalid_argument for h < 1.
HillJet<double> hill_derivatives(double xi, const FeedbackFn& fb);

/// Linear chain with one feedback:
///   x_1' = \int theta_1 f(x_k(t+s)) ds - mu_1 x_1
///   x_j' = alpha_j \int theta_j x_{j-1}(t+s) ds - mu_j x_j,  j = 2..k
struct CascadeSpec {
  int k = 1;
  Vector mu;
  /// alpha(j-2) is the production rate of species j (size k-1).
  Vector alpha;
  FeedbackFn feedback = FeedbackFn::affine(0.0, 0.0);
  std::vector<DelayKernel> kernels;

  double tau_max() const { return kernels.empty() ? 0.0 : kernels.front().tau_max(); }
};

/// Throws std::invalid_argument naming the violated invariant.
void validate(const CascadeSpec& spec);

struct SteadyState {
  Vector xbar;
  Vector delta;
};

/// delta_k = 1, delta_j = delta_{j+1} mu_{j+1} / alpha_{j+1}.
Vector scale_factors(const CascadeSpec& spec);

/// Unique nonnegative equilibrium: x_k solves f(x) = mu_1 delta_1 x by
/// bisection on [0, sup f / (mu_1 delta_1)], x_j = delta_j x_k.
/// Throws std::invalid_argument when the feedback is not nonincreasing
/// (256-point sample check) and BracketError when there is no sign change.
SteadyState steady_state(const CascadeSpec& spec, double tol = 1e-12);

/// Root of f(x) = slope * x on [0, upper] for a nonincreasing f.
double solve_balance(const std::function<double(double)>& f, double slope,
                     double upper, double tol);

struct Hes1RawParams {
  double alpha = 1.0;
  double k_half = 1.0;
  double h = 2.0;
  double beta = 1.0;
  double k_r = 1.0;
  double k_p = 1.0;
  double tau_r = 1.0;
  bool operator==(const Hes1RawParams&) const = default;
};

void validate(const Hes1RawParams& raw);

/// k k_p k_r / (alpha beta): the dimensionless group the global test is
/// stated in.
double hes1_ratio(const Hes1RawParams& raw);

/// Hill repression in raw units, alpha k^h / (k^h + p^h).
double hes1_raw_feedback(const Hes1RawParams& raw, double p);

struct Hes1Rescaled {
  CascadeSpec spec;
  double mu;
  double b;
  double h;
  double tau;
  /// Raw steady-state protein level.
  double p_bar;
};

/// Nondimensionalised two-species system with mu = k_p/k_r, time scaled by
/// k_r, tau = k_r tau_r and b = k/p_bar. Its steady state is (mu, 1).
Hes1Rescaled rescale_hes1(const Hes1RawParams& raw, double tol = 1e-12);

/// Parameters placing the inflection point of the rescaled Hill function at
/// xi = 1: returns k k_p k_r/(alpha beta) = (h+1)/(2h) ((h+1)/(h-1))^{1/h}.
double hes1_inflection_ratio(double h);

}  // namespace cascade

#endif  // CASCADE_MODEL_HPP
