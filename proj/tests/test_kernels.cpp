#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cascade/kernels.hpp"

using cascade::DelayKernel;
using cascade::discretize;
using cascade::support_separated_from_zero;

namespace {

double weight_sum(const cascade::QuadratureRule& rule) {
  return std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
}

// Composite Simpson on [a, b], n even.
template <typename Fn>
double simpson(Fn&& fn, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = fn(a) + fn(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * fn(a + i * h);
  return acc * h / 3.0;
}

// Piecewise-linear interpolation through (xs, ys), zero outside.
double pl(const std::vector<double>& xs, const std::vector<double>& ys, double s) {
  if (s < xs.front() || s > xs.back()) return 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (s <= xs[i + 1]) {
      const double w = (s - xs[i]) / (xs[i + 1] - xs[i]);
      return ys[i] + w * (ys[i + 1] - ys[i]);
    }
  }
  return ys.back();
}

DelayKernel exponential_table(int nodes, std::vector<double>* xs_out = nullptr,
                              std::vector<double>* ys_out = nullptr) {
  std::vector<double> xs, ys;
  for (int i = 0; i < nodes; ++i) {
    const double s = -1.0 + static_cast<double>(i) / (nodes - 1);
    xs.push_back(s);
    ys.push_back(3.0 * std::exp(3.0 * s));
  }
  if (xs_out) *xs_out = xs;
  if (ys_out) *ys_out = ys;
  return DelayKernel::tabulated(xs, ys, 1.0);
}

}  // namespace

TEST_CASE("factories reject kernels outside the horizon") {
  CHECK_THROWS_AS(DelayKernel::dirac(-1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DelayKernel::dirac(0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DelayKernel::uniform(-0.5, -0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DelayKernel::uniform(-2.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DelayKernel::tabulated({-1.0, 0.0}, {1.0, -0.1}, 1.0), std::invalid_argument);
  CHECK_NOTHROW(DelayKernel::dirac(0.0, 0.0));
}

TEST_CASE("support separation") {
  auto d1 = support_separated_from_zero(DelayKernel::dirac(-1.0, 1.0));
  CHECK(d1.separated);
  CHECK(d1.tau_min == doctest::Approx(1.0));

  auto d0 = support_separated_from_zero(DelayKernel::dirac(0.0, 1.0));
  CHECK_FALSE(d0.separated);
  CHECK(d0.tau_min == 0.0);

  auto u = support_separated_from_zero(DelayKernel::uniform(-2.0, -0.5, 2.0));
  CHECK(u.separated);
  CHECK(u.tau_min == doctest::Approx(0.5));

  // Zero density near 0 does not count as mass.
  auto t = support_separated_from_zero(
      DelayKernel::tabulated({-2.0, -1.0, -0.5, 0.0}, {1.0, 1.0, 0.0, 0.0}, 2.0));
  CHECK(t.separated);
  CHECK(t.tau_min == doctest::Approx(0.5));
}

TEST_CASE("dirac discretisation is a single unit weight") {
  auto rule = discretize(DelayKernel::dirac(-1.0, 1.0), 0.25);
  REQUIRE(rule.size() == 1);
  CHECK(rule.offsets[0] == doctest::Approx(-1.0));
  CHECK(rule.weights[0] == 1.0);
  CHECK(rule.grid_index[0] == -4);

  // Off-grid atoms snap within step/2, further is an error.
  auto snapped = discretize(DelayKernel::dirac(-0.3, 1.0), 0.25);
  CHECK(snapped.offsets[0] == doctest::Approx(-0.25));
  CHECK_THROWS_AS(discretize(DelayKernel::dirac(-1.0, 1.0), 0.0), std::invalid_argument);
}

TEST_CASE("uniform discretisation gives trapezoid weights") {
  auto rule = discretize(DelayKernel::uniform(-1.0, 0.0, 1.0), 0.25);
  const std::vector<double> offsets{-1.0, -0.75, -0.5, -0.25, 0.0};
  const std::vector<double> weights{0.125, 0.25, 0.25, 0.25, 0.125};
  REQUIRE(rule.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(rule.offsets[i] == doctest::Approx(offsets[i]).epsilon(1e-15));
    CHECK(rule.weights[i] == doctest::Approx(weights[i]).epsilon(1e-15));
  }
  CHECK_THROWS_AS(discretize(DelayKernel::uniform(-1.0, 0.0, 1.0), 0.3), std::invalid_argument);
}

TEST_CASE("tabulated exponential: renormalised weights and raw mass") {
  std::vector<double> xs, ys;
  auto kernel = exponential_table(41, &xs, &ys);
  auto rule = discretize(kernel, 0.025);
  CHECK(weight_sum(rule) == doctest::Approx(1.0).epsilon(1e-12));

  // Density integrates to 1 - e^{-3}; the tabulation error is O(node spacing^2).
  const double analytic = 1.0 - std::exp(-3.0);
  CHECK(rule.raw_mass == doctest::Approx(analytic).epsilon(2e-3));
  // On a grid containing the table nodes the trapezoid mass of the
  // piecewise-linear density is exact.
  const double pl_mass = simpson([&](double s) { return pl(xs, ys, s); }, -1.0, 0.0, 4000);
  CHECK(rule.raw_mass == doctest::Approx(pl_mass).epsilon(1e-10));

  CHECK_THROWS_AS(DelayKernel::tabulated({-1.0, 0.0}, {0.0, 0.0}, 1.0), std::invalid_argument);
}

TEST_CASE("weights sum to one and integrate constants exactly") {
  const std::vector<DelayKernel> kernels{
      DelayKernel::dirac(-0.5, 1.0), DelayKernel::dirac(0.0, 1.0),
      DelayKernel::uniform(-1.0, 0.0, 1.0), DelayKernel::uniform(-0.75, -0.25, 1.0),
      exponential_table(5), DelayKernel::tabulated({-1.0, -0.5, 0.0}, {0.0, 2.0, 0.0}, 1.0)};
  for (const auto& kernel : kernels) {
    for (double step : {0.25, 0.125, 0.05, 0.01}) {
      auto rule = discretize(kernel, step);
      CHECK(weight_sum(rule) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(rule.apply([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
      for (double w : rule.weights) CHECK(w >= 0.0);
      for (std::size_t i = 1; i < rule.size(); ++i) CHECK(rule.offsets[i] > rule.offsets[i - 1]);
    }
  }
}

TEST_CASE("rule reproduces the kernel mean") {
  // Uniform: trapezoid is exact for the linear integrand.
  auto uni = DelayKernel::uniform(-1.0, -0.25, 1.0);
  CHECK(uni.mean() == doctest::Approx(-0.625));
  for (double step : {0.25, 0.125}) {
    auto rule = discretize(uni, step);
    CHECK(std::abs(rule.apply([](double s) { return s; }) - uni.mean()) < 1e-14);
  }

  // Non-constant density: second-order convergence.
  std::vector<double> xs, ys;
  auto kernel = exponential_table(5, &xs, &ys);
  const double mass = simpson([&](double s) { return pl(xs, ys, s); }, -1.0, 0.0, 4000);
  const double mean = simpson([&](double s) { return s * pl(xs, ys, s); }, -1.0, 0.0, 4000) / mass;
  CHECK(kernel.mean() == doctest::Approx(mean).epsilon(1e-12));

  const double e1 = std::abs(discretize(kernel, 0.05).apply([](double s) { return s; }) - mean);
  const double e2 = std::abs(discretize(kernel, 0.025).apply([](double s) { return s; }) - mean);
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("transform matches direct quadrature") {
  std::vector<double> xs, ys;
  auto tab = exponential_table(9, &xs, &ys);
  const double mass = simpson([&](double s) { return pl(xs, ys, s); }, -1.0, 0.0, 8000);
  const std::complex<double> lambda(0.3, 2.0);
  auto re = [&](double s) { return pl(xs, ys, s) * std::real(std::exp(lambda * s)); };
  auto im = [&](double s) { return pl(xs, ys, s) * std::imag(std::exp(lambda * s)); };
  const std::complex<double> expected(simpson(re, -1.0, 0.0, 8000) / mass,
                                      simpson(im, -1.0, 0.0, 8000) / mass);
  CHECK(std::abs(tab.transform(lambda) - expected) < 1e-9);

  auto dirac = DelayKernel::dirac(-1.5, 2.0);
  CHECK(std::abs(dirac.transform(lambda) - std::exp(-1.5 * lambda)) < 1e-14);

  auto uni = DelayKernel::uniform(-2.0, -1.0, 2.0);
  const std::complex<double> u_expected = (std::exp(-lambda) - std::exp(-2.0 * lambda)) / lambda;
  CHECK(std::abs(uni.transform(lambda) - u_expected) < 1e-14);
  CHECK(std::abs(uni.transform(0.0) - 1.0) < 1e-14);
}
