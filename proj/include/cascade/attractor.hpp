#ifndef CASCADE_ATTRACTOR_HPP
#define CASCADE_ATTRACTOR_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cascade/model.hpp"
#include "cascade/types.hpp"

namespace cascade {

using ScalarMap = std::function<double(double)>;

/// H(y) = (h_1(y_k), h_2(y_1), ..., h_k(y_{k-1})) with slope bounds
/// |h_1(x)| < beta_1 |x| (x != 0) and |h_j(x)| <= beta_j |x|.
struct CycleMap {
  std::vector<ScalarMap> h;
  Vector betas;
  /// Per component: h_j monotone, so the image of an interval is the hull of
  /// the endpoint images.
  std::vector<bool> monotone;

  int k() const { return static_cast<int>(h.size()); }
  Vector apply(const Vector& y) const;
};

struct SlopeCheck {
  bool ok = true;
  int component = -1;
  double witness = 0.0;
  std::string message;
};

/// Samples `samples` points of [-radius_{j-1}, radius_{j-1}] per component
/// (the argument of h_j) against the slope bounds. The bound on h_1 is strict
/// only when `strict_first` is set (needed when prod beta = 1).
SlopeCheck check_slopes(const CycleMap& map, const Vector& radius, bool strict_first = false,
                        int samples = 10000);

/// q_1..q_k with q_k = 1 and beta_1...beta_j < q_j < q_{j+1}/beta_{j+1}.
/// Throws std::invalid_argument when prod beta >= 1.
Vector choose_q(const Vector& betas);

/// Strictly increasing h~ with |h_1(x)| <= h~(x) < beta_1 x on a uniform grid
/// over [0, x_max]; linear interpolation between nodes.
class TildeMajorant {
 public:
  TildeMajorant(const ScalarMap& h1, double beta1, double x_max, int nodes = 4096);
  double operator()(double x) const;
  const std::vector<double>& nodes() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }
  /// Running max of |h_1| over [-x_i, x_i] at the nodes.
  const std::vector<double>& running_max() const { return ms_; }
  double beta() const { return beta_; }

 private:
  std::vector<double> xs_, ys_, ms_;
  double beta_;
  double dx_;
};

TildeMajorant tilde_majorant(const ScalarMap& h1, double beta1, double x_max, int nodes = 4096);

struct BoxSequence {
  /// radii(j, m - 1) = a_j(m).
  Matrix radii;
  Vector q;
  bool strict_case = true;
  double a = 0.0;
  /// Product-one branch only.
  double a_tilde = 0.0;
  double r = 0.0;
  std::optional<TildeMajorant> majorant;
  std::vector<std::string> notes;

  int m_max() const { return static_cast<int>(radii.cols()); }
};

/// Nested boxes I_m = prod [-a_j(m), a_j(m)] covering the box K of half-widths
/// k_radius. Throws std::invalid_argument for m_max < 2, prod beta > 1 or a
/// failed slope check.
BoxSequence box_sequence(const CycleMap& map, const Vector& k_radius, int m_max,
                         int majorant_nodes = 4096);

struct ConditionReport {
  bool passed = true;
  std::string detail;
  /// Witness point (box index m and the offending argument) on failure.
  std::optional<int> witness_m;
  std::optional<int> witness_component;
  std::optional<double> witness_x;
};

struct AttractorReport {
  ConditionReport b1, b2, b3;
  double min_margin = 0.0;
  double final_radius = 0.0;
  /// Sampling verifies, it does not prove.
  std::string caveat = "sampled falsification check, not a proof";
  bool passed() const { return b1.passed && b2.passed && b3.passed; }
};

/// (B1) K inside int I_1, (B2) H(I_m) in I_{m+1} in int I_m, (B3) radii
/// decreasing and below `b3_tol` at m_max (otherwise reported as not yet
/// below tolerance, which is not a failure).
AttractorReport verify_strong_attractor(const CycleMap& map, const BoxSequence& boxes,
                                        const Vector& k_radius, int samples_per_face,
                                        double b3_tol = 1e-8);

/// y(0) = y0, y(n+1) = H(y(n)); columns of the result.
Matrix iterate_map(const CycleMap& map, const Vector& y0, int n);

/// The cascade map at its steady state: h_1(y) = (f(xbar_k + y) - f(xbar_k))/mu_1,
/// h_j(y) = alpha_j y / mu_j, with beta_1 = cone / mu_1 * (1 + margin).
CycleMap cascade_cycle_map(const CascadeSpec& spec, const Vector& xbar, double cone,
                           double margin = 1e-3);

/// Rescaled Hes1 around (mu, 1) collapsed to one component: one period of the
/// two-species cycle, v -> (f(1 + v) - f(1)) / mu, with beta = cone/mu (1 + margin).
CycleMap hes1_cycle_map(double mu, double b, double h, double margin = 1e-3);

/// sup |f(x) - f(c)| / |x - c| over `samples` points of [lo, hi] (x != c),
/// together with |f'(c)|.
double estimate_cone_slope(const FeedbackFn& f, double c, double lo, double hi, int samples);

}  // namespace cascade

#endif  // CASCADE_ATTRACTOR_HPP
