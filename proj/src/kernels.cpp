#include "cascade/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cascade {

namespace {

constexpr double kGridTol = 1e-8;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("delay kernel: " + msg);
}

// Index n with n * step == x up to kGridTol relative to step.
long grid_index_of(double x, double step, const char* what) {
  const double q = x / step;
  const double n = std::round(q);
  if (std::abs(q - n) > kGridTol) {
    std::ostringstream msg;
    msg << what << " = " << x << " is not a multiple of step " << step;
    fail(msg.str());
  }
  return static_cast<long>(n);
}

double interp_density(const Tabulated& t, double s) {
  const auto& xs = t.nodes;
  if (s < xs.front() || s > xs.back()) return 0.0;
  auto it = std::upper_bound(xs.begin(), xs.end(), s);
  if (it == xs.end()) return t.densities.back();
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double x0 = xs[i - 1], x1 = xs[i];
  const double w = (s - x0) / (x1 - x0);
  return (1.0 - w) * t.densities[i - 1] + w * t.densities[i];
}

// \int_{s0}^{s1} (rho0 + (rho1 - rho0)(s - s0)/L) e^{lambda s} ds
std::complex<double> linear_segment_transform(double s0, double s1, double rho0,
                                              double rho1,
                                              std::complex<double> lambda) {
  const double len = s1 - s0;
  if (std::abs(lambda) * len < 1e-3) {
    // Simpson is exact for cubics; the remainder is O((lambda L)^4).
    const double sm = 0.5 * (s0 + s1);
    const double rm = 0.5 * (rho0 + rho1);
    return len / 6.0 *
           (rho0 * std::exp(lambda * s0) + 4.0 * rm * std::exp(lambda * sm) +
            rho1 * std::exp(lambda * s1));
  }
  const std::complex<double> e0 = std::exp(lambda * s0);
  const std::complex<double> e1 = std::exp(lambda * s1);
  const std::complex<double> i0 = (e1 - e0) / lambda;
  const std::complex<double> i1 = len * e1 / lambda - (e1 - e0) / (lambda * lambda);
  return rho0 * i0 + (rho1 - rho0) / len * i1;
}

Tabulated as_table(const Uniform& u) { return Tabulated{{u.a, u.b}, {1.0, 1.0}}; }

double table_mass(const Tabulated& t) {
  double m = 0.0;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    m += 0.5 * (t.nodes[i] - t.nodes[i - 1]) * (t.densities[i] + t.densities[i - 1]);
  }
  return m;
}

double table_first_moment(const Tabulated& t) {
  double m = 0.0;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    const double s0 = t.nodes[i - 1], s1 = t.nodes[i];
    const double r0 = t.densities[i - 1], r1 = t.densities[i];
    m += (s1 - s0) * (s0 * (2.0 * r0 + r1) + s1 * (r0 + 2.0 * r1)) / 6.0;
  }
  return m;
}

std::complex<double> table_transform(const Tabulated& t, std::complex<double> lambda) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    acc += linear_segment_transform(t.nodes[i - 1], t.nodes[i], t.densities[i - 1],
                                    t.densities[i], lambda);
  }
  return acc / table_mass(t);
}

void validate(const DelayKernel::Variant& v, double tau_max) {
  if (!(tau_max >= 0.0) || !std::isfinite(tau_max)) fail("tau_max must be finite and >= 0");
  if (const auto* d = std::get_if<Dirac>(&v)) {
    if (!(d->at <= 0.0 && d->at >= -tau_max)) fail("Dirac offset outside [-tau_max, 0]");
  } else if (const auto* u = std::get_if<Uniform>(&v)) {
    if (!(u->a >= -tau_max && u->a < u->b && u->b <= 0.0)) {
      fail("Uniform requires -tau_max <= a < b <= 0");
    }
  } else {
    const auto& t = std::get<Tabulated>(v);
    if (t.nodes.size() < 2 || t.nodes.size() != t.densities.size()) {
      fail("table needs >= 2 nodes and one density per node");
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      if (!std::isfinite(t.nodes[i]) || !std::isfinite(t.densities[i])) fail("non-finite table entry");
      if (t.densities[i] < 0.0) fail("negative density in table");
      if (i > 0 && !(t.nodes[i] > t.nodes[i - 1])) fail("table nodes must be strictly increasing");
    }
    if (t.nodes.front() < -tau_max || t.nodes.back() > 0.0) fail("table nodes outside [-tau_max, 0]");
    if (table_mass(t) <= 0.0) fail("table density has zero mass");
  }
}

QuadratureRule trapezoid_on_grid(const Tabulated& t, double step) {
  const long first = grid_index_of(t.nodes.front(), step, "support start");
  const long last = grid_index_of(t.nodes.back(), step, "support end");
  QuadratureRule rule;
  const long count = last - first + 1;
  rule.offsets.reserve(static_cast<std::size_t>(count));
  double mass = 0.0;
  for (long n = first; n <= last; ++n) {
    // Endpoints use the table values directly; grid rounding must not zero them.
    double rho;
    if (n == first) {
      rho = t.densities.front();
    } else if (n == last) {
      rho = t.densities.back();
    } else {
      rho = interp_density(t, static_cast<double>(n) * step);
    }
    const double w = (n == first || n == last) ? 0.5 * step * rho : step * rho;
    rule.offsets.push_back(static_cast<double>(n) * step);
    rule.grid_index.push_back(n);
    rule.weights.push_back(w);
    mass += w;
  }
  if (!(mass > 0.0)) fail("density has no mass on the solver grid");
  for (double& w : rule.weights) w /= mass;
  rule.raw_mass = mass;
  return rule;
}

}  // namespace

DelayKernel::DelayKernel(Variant v, double tau_max)
    : variant_(std::move(v)), tau_max_(tau_max) {
  validate(variant_, tau_max_);
}

DelayKernel DelayKernel::dirac(double at, double tau_max) {
  return DelayKernel(Dirac{at}, tau_max);
}

DelayKernel DelayKernel::uniform(double a, double b, double tau_max) {
  return DelayKernel(Uniform{a, b}, tau_max);
}

DelayKernel DelayKernel::tabulated(std::vector<double> nodes,
                                   std::vector<double> densities, double tau_max) {
  return DelayKernel(Tabulated{std::move(nodes), std::move(densities)}, tau_max);
}

DelayKernel DelayKernel::with_tau_max(double tau_max) const {
  return DelayKernel(variant_, tau_max);
}

double DelayKernel::support_infimum() const {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return v.at;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return v.a;
        } else {
          // First node whose right-hand segment carries mass.
          for (std::size_t i = 0; i + 1 < v.nodes.size(); ++i) {
            if (v.densities[i] > 0.0 || v.densities[i + 1] > 0.0) return v.nodes[i];
          }
          return v.nodes.front();
        }
      },
      variant_);
}

double DelayKernel::support_supremum() const {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return v.at;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return v.b;
        } else {
          for (std::size_t i = v.nodes.size() - 1; i > 0; --i) {
            if (v.densities[i] > 0.0 || v.densities[i - 1] > 0.0) return v.nodes[i];
          }
          return v.nodes.back();
        }
      },
      variant_);
}

double DelayKernel::mean() const {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return v.at;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return 0.5 * (v.a + v.b);
        } else {
          return table_first_moment(v) / table_mass(v);
        }
      },
      variant_);
}

std::complex<double> DelayKernel::transform(std::complex<double> lambda) const {
  return std::visit(
      [&](const auto& v) -> std::complex<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return std::exp(lambda * v.at);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return table_transform(as_table(v), lambda);
        } else {
          return table_transform(v, lambda);
        }
      },
      variant_);
}

SupportSeparation support_separated_from_zero(const DelayKernel& kernel) {
  const double sup = kernel.support_supremum();
  if (sup < 0.0) return {true, -sup};
  return {false, 0.0};
}

QuadratureRule discretize(const DelayKernel& kernel, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) fail("step must be positive");
  return std::visit(
      [&](const auto& v) -> QuadratureRule {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          const long n = std::lround(v.at / step);
          const double snapped = static_cast<double>(n) * step;
          if (std::abs(snapped - v.at) > 0.5 * step * (1.0 + 1e-12)) {
            fail("Dirac offset snaps further than step/2");
          }
          QuadratureRule rule;
          rule.offsets = {snapped};
          rule.weights = {1.0};
          rule.grid_index = {n};
          return rule;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return trapezoid_on_grid(as_table(v), step);
        } else {
          return trapezoid_on_grid(v, step);
        }
      },
      kernel.variant());
}

}  // namespace cascade
