#ifndef CASCADE_HILL_HPP
#define CASCADE_HILL_HPP

#include <string>
#include <vector>

#include "cascade/model.hpp"
#include "cascade/stability.hpp"

namespace cascade {

/// How the cone through (1, f(1)) is attained.
///   TangentInterior: tangent from (1, f(1)) touches the graph at x_0 != 1.
///   InflectionAtOne: the inflection sits at 1 and x_0 = 1.
///   ConvexFromZero:  f convex on [0, inf) (h = 1), x_0 = 0.
enum class HillCase { TangentInterior, InflectionAtOne, ConvexFromZero };

std::string to_string(HillCase c);

struct HillAnalysis {
  double h = 1.0;
  double b = 1.0;
  double mu = 1.0;
  /// Inflection abscissa b ((h-1)/(h+1))^{1/h}; 0 for h = 1.
  double x_c = 0.0;
  double x_0 = 0.0;
  /// ln x_0; -inf in the convex case. Kept because x_0 underflows for h near 1.
  double log_x0 = 0.0;
  double cone_slope = 0.0;
  HillCase kase = HillCase::TangentInterior;
};

/// (xi - 1) f'(xi) - (f(xi) - f(1)) for the Hill feedback fb.
double g_eval(double xi, const FeedbackFn& fb);

/// Tangency point of the cone for f = mu (b^h+1)/(b^h+xi^h). Requires h >= 1, b > 0.
HillAnalysis x0_root(double h, double b, double mu = 1.0);

/// Smallest alpha with |f(x) - f(1)| <= alpha |x - 1| for all x >= 0.
double cone_slope(double h, double b, double mu = 1.0);

/// The b with cone_slope(h, b, mu) = mu. Requires h > 1. `tol` bounds the
/// final bracket width (0 runs bisection to machine resolution).
double b_bar(double h, double tol = 0.0);

/// Critical value of k k_p k_r/(alpha beta): 0.5 at h = 1, b^{h+1}/(b^h+1) at b = b_bar(h).
double region_threshold(double h);

/// Global test for the Hes1 model in raw parameters.
StabilityReport check_hes1_global(const Hes1RawParams& raw);

/// Raw parameters realising a given ratio k k_p k_r/(alpha beta), with
/// alpha = beta = k_r = 1, k_p = mu and tau_r = tau.
Hes1RawParams hes1_params_for_ratio(double h, double ratio, double mu = 1.0, double tau = 1.0);

struct RegionCurve {
  std::vector<double> h_grid;
  std::vector<double> thresholds;
};

/// n_points equispaced exponents on [h_min, h_max].
RegionCurve region_curve(double h_min, double h_max, int n_points);
RegionCurve region_curve(const std::vector<double>& h_grid);

/// h = 1, 1.1, 1.3, ..., 9.9, 10: spacing 0.2 with both ends included.
std::vector<double> default_region_grid();

}  // namespace cascade

#endif  // CASCADE_HILL_HPP
