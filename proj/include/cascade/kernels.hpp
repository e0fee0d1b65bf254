#ifndef CASCADE_KERNELS_HPP
#define CASCADE_KERNELS_HPP

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

namespace cascade {

/// Point mass at offset `at` in [-tau, 0].
struct Dirac {
  double at;
  bool operator==(const Dirac&) const = default;
};

/// Constant density on [a, b], -tau <= a < b <= 0.
struct Uniform {
  double a;
  double b;
  bool operator==(const Uniform&) const = default;
};

/// Piecewise-linear density through (nodes[i], densities[i]); zero outside
/// [nodes.front(), nodes.back()]. Need not be normalised.
struct Tabulated {
  std::vector<double> nodes;
  std::vector<double> densities;
  bool operator==(const Tabulated&) const = default;
};

/// A probability measure on [-tau_max, 0] describing how past values of the
/// upstream species enter one equation of the cascade.
///
/// Values are immutable once built; the factories validate the variant
/// against the horizon and throw std::invalid_argument on violation.
class DelayKernel {
 public:
  using Variant = std::variant<Dirac, Uniform, Tabulated>;

  static DelayKernel dirac(double at, double tau_max);
  static DelayKernel uniform(double a, double b, double tau_max);
  static DelayKernel tabulated(std::vector<double> nodes,
                               std::vector<double> densities, double tau_max);

  double tau_max() const noexcept { return tau_max_; }
  const Variant& variant() const noexcept { return variant_; }

  /// Leftmost point of the support.
  double support_infimum() const;
  /// Rightmost point of the support.
  double support_supremum() const;
  /// First moment  \int s dtheta(s).
  double mean() const;
  bool is_point_mass() const noexcept {
    return std::holds_alternative<Dirac>(variant_);
  }

  /// Laplace-type transform  \int theta(s) e^{lambda s} ds, computed exactly
  /// for each variant (piecewise-linear densities are integrated in closed
  /// form segment by segment).
  std::complex<double> transform(std::complex<double> lambda) const;

  /// Same kernel with a different horizon (which must still contain the
  /// support).
  DelayKernel with_tau_max(double tau_max) const;

  bool operator==(const DelayKernel&) const = default;

 private:
  DelayKernel(Variant v, double tau_max);

  Variant variant_;
  double tau_max_ = 0.0;
};

struct SupportSeparation {
  bool separated = false;
  double tau_min = 0.0;
};

/// Whether all kernel mass lies in [-tau, -tau_min] for some tau_min > 0,
/// together with the largest such tau_min.
SupportSeparation support_separated_from_zero(const DelayKernel& kernel);

/// Nodes on the solver grid with nonnegative weights summing to one.
struct QuadratureRule {
  std::vector<double> offsets;
  std::vector<double> weights;
  /// offsets[i] == grid_index[i] * step (grid_index <= 0).
  std::vector<long> grid_index;
  /// Trapezoid integral of the density before renormalisation (1 for Dirac).
  double raw_mass = 1.0;

  std::size_t size() const noexcept { return offsets.size(); }

  template <typename Fn>
  double apply(Fn&& fn) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      acc += weights[i] * fn(offsets[i]);
    }
    return acc;
  }
};

/// Composite-trapezoid rule for Uniform/Tabulated kernels on a grid of
/// spacing `step`; a Dirac kernel becomes one unit weight at the nearest grid
/// offset. Throws std::invalid_argument for step <= 0, supports that do not
/// sit on the grid, snapping further than step/2, or a density with no mass.
QuadratureRule discretize(const DelayKernel& kernel, double step);

}  // namespace cascade

#endif  // CASCADE_KERNELS_HPP
