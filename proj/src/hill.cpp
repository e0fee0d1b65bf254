#include "cascade/hill.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cascade/roots.hpp"

namespace cascade {

namespace {

constexpr double kTripleRootTol = 1e-10;
constexpr int kMaxGrowth = 60;

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

// R(u) with xi = e^u, B = b^h:
//   g(xi) = -(xi - 1) mu R / (B + xi^h)^2,
//   R     = (B + 1) h xi^{h-1} - (B + xi^h) (xi^h - 1)/(xi - 1).
// The difference quotient is expm1(h u)/expm1(u), which stays accurate near xi = 1.
double r_of_u(double u, double h, double big_b) {
  const double quotient = u == 0.0 ? h : std::expm1(h * u) / std::expm1(u);
  return (big_b + 1.0) * h * std::exp((h - 1.0) * u) - (big_b + std::exp(h * u)) * quotient;
}

// |f'(e^u)| / mu
double slope_ratio(double u, double h, double big_b) {
  const double d = big_b + std::exp(h * u);
  return (big_b + 1.0) * h * std::exp((h - 1.0) * u) / (d * d);
}

void check_params(double h, double b, double mu) {
  if (!(h >= 1.0) || !std::isfinite(h)) invalid("hill: h must be >= 1");
  if (!(b > 0.0) || !std::isfinite(b)) invalid("hill: b must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu)) invalid("hill: mu must be positive");
}

}  // namespace

std::string to_string(HillCase c) {
  switch (c) {
    case HillCase::TangentInterior: return "TangentInterior";
    case HillCase::InflectionAtOne: return "InflectionAtOne";
    case HillCase::ConvexFromZero: return "ConvexFromZero";
  }
  return "TangentInterior";
}

double g_eval(double xi, const FeedbackFn& fb) {
  const auto jet = hill_derivatives(xi, fb);
  const double f1 = hill_derivatives(1.0, fb).f;
  return (xi - 1.0) * jet.df - (jet.f - f1);
}

HillAnalysis x0_root(double h, double b, double mu) {
  check_params(h, b, mu);
  HillAnalysis a;
  a.h = h;
  a.b = b;
  a.mu = mu;
  const double big_b = std::pow(b, h);
  if (h == 1.0) {
    a.kase = HillCase::ConvexFromZero;
    a.x_c = 0.0;
    a.x_0 = 0.0;
    a.log_x0 = -std::numeric_limits<double>::infinity();
    a.cone_slope = mu / b;
    return a;
  }
  a.x_c = b * std::pow((h - 1.0) / (h + 1.0), 1.0 / h);
  if (std::abs(a.x_c - 1.0) <= kTripleRootTol) {
    a.kase = HillCase::InflectionAtOne;
    a.x_0 = 1.0;
    a.log_x0 = 0.0;
    a.cone_slope = mu * h / (big_b + 1.0);
    return a;
  }
  const double uc = std::log(a.x_c);
  const auto r = [&](double u) { return r_of_u(u, h, big_b); };
  double d = 1.0;
  double u0;
  if (a.x_c < 1.0) {
    // R > 0 at the inflection and R -> -B as xi -> 0.
    int grow = 0;
    while (r(uc - d) >= 0.0) {
      d *= 2.0;
      if (++grow > kMaxGrowth) {
        std::ostringstream msg;
        msg << "x0_root: no sign change below x_c (h = " << h << ", b = " << b << ")";
        throw BracketError(r(uc - d), r(uc), msg.str());
      }
    }
    u0 = bisect_signed(r, uc - d, uc, -1);
  } else {
    // R > 0 at the inflection and eventually negative above it.
    int grow = 0;
    while (r(uc + d) > 0.0) {
      d *= 2.0;
      if (++grow > kMaxGrowth) {
        std::ostringstream msg;
        msg << "x0_root: no sign change above x_c (h = " << h << ", b = " << b << ")";
        throw BracketError(r(uc), r(uc + d), msg.str());
      }
    }
    u0 = bisect_signed(r, uc, uc + d, 1);
  }
  a.kase = HillCase::TangentInterior;
  a.log_x0 = u0;
  a.x_0 = std::exp(u0);
  a.cone_slope = mu * slope_ratio(u0, h, big_b);
  return a;
}

double cone_slope(double h, double b, double mu) { return x0_root(h, b, mu).cone_slope; }

double b_bar(double h, double tol) {
  if (!(h > 1.0) || !std::isfinite(h)) invalid("b_bar: requires h > 1");
  const double b_infl = std::pow((h + 1.0) / (h - 1.0), 1.0 / h);
  const auto excess = [h](double b) { return cone_slope(h, b) - 1.0; };
  double lo = b_infl / 4.0, hi = 4.0 * b_infl;
  int grow = 0;
  while (excess(lo) <= 0.0) {
    lo /= 4.0;
    if (++grow > kMaxGrowth) throw BracketError(excess(lo), excess(hi), "b_bar: lower bracket");
  }
  grow = 0;
  while (excess(hi) >= 0.0) {
    hi *= 4.0;
    if (++grow > kMaxGrowth) throw BracketError(excess(lo), excess(hi), "b_bar: upper bracket");
  }
  return bisect_signed(excess, lo, hi, 1, tol);
}

double region_threshold(double h) {
  if (!(h >= 1.0) || !std::isfinite(h)) invalid("region_threshold: requires h >= 1");
  if (h == 1.0) return 0.5;
  const double b = b_bar(h);
  const double bh = std::pow(b, h);
  return bh * b / (bh + 1.0);
}

Hes1RawParams hes1_params_for_ratio(double h, double ratio, double mu, double tau) {
  if (!(ratio > 0.0)) invalid("hes1: ratio must be positive");
  if (!(mu > 0.0)) invalid("hes1: mu must be positive");
  Hes1RawParams raw;
  raw.alpha = 1.0;
  raw.beta = 1.0;
  raw.k_r = 1.0;
  raw.k_p = mu;
  raw.h = h;
  raw.tau_r = tau;
  raw.k_half = ratio / mu;
  validate(raw);
  return raw;
}

StabilityReport check_hes1_global(const Hes1RawParams& raw) {
  const Hes1Rescaled sys = rescale_hes1(raw);
  const HillAnalysis an = x0_root(sys.h, sys.b, sys.mu);
  const double r = hes1_ratio(raw);
  const double thr = region_threshold(sys.h);

  LinearizationData lin;
  lin.mu = Vector(2);
  lin.mu << 1.0, sys.mu;
  lin.gamma = Vector(2);
  lin.gamma << hill_jet(1.0, sys.mu, sys.b, sys.h).df, 1.0;
  lin.tau_points = Vector(2);
  (*lin.tau_points) << sys.tau, 0.0;

  StabilityReport rep;
  rep.gamma_product = lin.gamma.prod();
  rep.mu_product = lin.mu.prod();
  const bool tie = std::abs(r - thr) <= 1e-12 * thr;
  if (tie) {
    if (an.kase == HillCase::InflectionAtOne || an.kase == HillCase::ConvexFromZero) {
      rep.verdict = Verdict::GloballyStable;
      rep.notes.push_back("ratio_equals_threshold_inflection_case");
    } else {
      rep.verdict = Verdict::Inconclusive;
      rep.notes.push_back("ratio_equals_threshold_tangent_case");
    }
    return rep;
  }
  if (r > thr) {
    rep.verdict = Verdict::GloballyStable;
    rep.notes.push_back("ratio_above_threshold");
    return rep;
  }
  Vector alphas(2);
  alphas << an.cone_slope, 1.0;
  rep = classify(lin, alphas);
  rep.notes.insert(rep.notes.begin(), "ratio_below_threshold");
  return rep;
}

RegionCurve region_curve(const std::vector<double>& h_grid) {
  RegionCurve c;
  c.h_grid = h_grid;
  c.thresholds.reserve(h_grid.size());
  for (double h : h_grid) c.thresholds.push_back(region_threshold(h));
  return c;
}

RegionCurve region_curve(double h_min, double h_max, int n_points) {
  if (!(h_min >= 1.0) || !(h_max > h_min)) invalid("region_curve: requires 1 <= h_min < h_max");
  if (n_points < 2) invalid("region_curve: need at least 2 points");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    grid.push_back(i + 1 == n_points ? h_max
                                     : h_min + (h_max - h_min) * static_cast<double>(i) /
                                                   (n_points - 1));
  }
  return region_curve(grid);
}

std::vector<double> default_region_grid() {
  std::vector<double> grid{1.0};
  for (int i = 0; i <= 44; ++i) grid.push_back(static_cast<double>(11 + 2 * i) / 10.0);
  grid.push_back(10.0);
  return grid;
}

}  // namespace cascade
