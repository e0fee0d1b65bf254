#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cascade/model.hpp"
#include "cascade/solver.hpp"

using namespace cascade;

namespace {

CascadeSpec chain(const Vector& mu, const Vector& alpha, FeedbackFn fb) {
  CascadeSpec spec;
  spec.k = static_cast<int>(mu.size());
  spec.mu = mu;
  spec.alpha = alpha;
  spec.feedback = std::move(fb);
  for (int j = 0; j < spec.k; ++j) spec.kernels.push_back(DelayKernel::dirac(0.0, 1.0));
  return spec;
}

// Right-hand side of the cascade at a constant state.
Vector rhs_at_rest(const CascadeSpec& spec, const Vector& x) {
  Vector r(spec.k);
  r(0) = spec.feedback(x(spec.k - 1)) - spec.mu(0) * x(0);
  for (int j = 1; j < spec.k; ++j) r(j) = spec.alpha(j - 1) * x(j - 1) - spec.mu(j) * x(j);
  return r;
}

Hes1RawParams random_raw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 5.0), hh(1.0, 8.0);
  Hes1RawParams raw;
  raw.alpha = u(rng);
  raw.k_half = u(rng);
  raw.h = hh(rng);
  raw.beta = u(rng);
  raw.k_r = u(rng);
  raw.k_p = u(rng);
  raw.tau_r = 1.0;
  return raw;
}

}  // namespace

TEST_CASE("hill values at the normalisation point") {
  auto fb = FeedbackFn::hill(1.7, 0.8, 3.0);
  CHECK(fb(1.0) == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(hill_derivatives(1.0, fb).f == doctest::Approx(1.7).epsilon(1e-15));

  // b^h = (1+h)/(h-1) puts the inflection at 1.
  for (double h : {1.5, 2.0, 3.0, 6.0}) {
    const double b = std::pow((1.0 + h) / (h - 1.0), 1.0 / h);
    CHECK(std::abs(hill_derivatives(1.0, FeedbackFn::hill(1.0, b, h)).d2f) < 1e-12);
  }

  const double mu = 1.3;
  auto jet = hill_derivatives(1.0, FeedbackFn::hill(mu, std::sqrt(5.0) / 2.0, 2.0));
  CHECK(jet.df == doctest::Approx(-8.0 / 9.0 * mu).epsilon(1e-14));
}

TEST_CASE("hill derivatives agree with finite differences") {
  // Differences of independent long double expressions for f and f'.
  const long double mu = 1.1L;
  for (double h : {1.0, 1.5, 2.0, 4.0, 9.0}) {
    for (double b : {0.3, 1.0, 2.5}) {
      auto fb = FeedbackFn::hill(static_cast<double>(mu), b, h);
      const long double bh = std::pow(static_cast<long double>(b), static_cast<long double>(h));
      auto f = [&](long double x) { return mu * (bh + 1) / (bh + std::pow(x, (long double)h)); };
      auto df = [&](long double x) {
        const long double den = bh + std::pow(x, (long double)h);
        return -mu * (bh + 1) * h * std::pow(x, (long double)h - 1) / (den * den);
      };
      for (int i = 0; i <= 60; ++i) {
        const long double xi = std::pow(10.0L, -3.0L + 6.0L * i / 60.0L);
        const long double d = 1e-6L * xi;
        auto jet = hill_derivatives(static_cast<double>(xi), fb);
        const double fd1 = static_cast<double>((f(xi + d) - f(xi - d)) / (2 * d));
        const double fd2 = static_cast<double>((df(xi + d) - df(xi - d)) / (2 * d));
        CHECK(std::abs(jet.df - fd1) <= std::max(1e-6, 1e-4 * std::abs(jet.df)));
        CHECK(std::abs(jet.d2f - fd2) <= std::max(1e-6, 1e-4 * std::abs(jet.d2f)));
      }
    }
  }
}

TEST_CASE("hill second derivative at zero") {
  auto jet = hill_derivatives(0.0, FeedbackFn::hill(1.0, 1.0, 1.5));
  CHECK(jet.d2f_unbounded);
  CHECK(jet.d2f == -std::numeric_limits<double>::infinity());
  CHECK_FALSE(hill_derivatives(0.0, FeedbackFn::hill(1.0, 1.0, 2.0)).d2f_unbounded);
  CHECK(std::isfinite(hill_derivatives(0.0, FeedbackFn::hill(1.0, 1.0, 1.0)).d2f));

  CHECK_THROWS_AS(hill_derivatives(-0.1, FeedbackFn::hill(1.0, 1.0, 2.0)), std::domain_error);
  CHECK_THROWS_AS(hill_derivatives(0.5, FeedbackFn::affine(1.0, 0.0)), std::domain_error);
  CHECK_THROWS_AS(hill_derivatives(0.5, FeedbackFn::hill(1.0, 1.0, 0.5)), std::invalid_argument);
}

TEST_CASE("clamp_extend") {
  auto hill = FeedbackFn::hill(1.0, 1.2, 2.0);
  CHECK_THROWS_AS(hill(-1.0), std::domain_error);
  auto ext = clamp_extend(hill);
  CHECK(ext(-1.0) == hill(0.0));
  CHECK(ext(0.0) == hill(0.0));
  CHECK(ext(1e-300) - ext(-1e-300) == doctest::Approx(0.0));
  for (double x : {-5.0, -1.0, 0.0, 0.5, 3.0, 1e6}) CHECK(ext(x) <= hill(0.0));

  auto aff = FeedbackFn::affine(2.0, -1.0, {0.0, 1.0});
  CHECK_THROWS_AS(aff(2.0), std::domain_error);
  auto aff_ext = clamp_extend(aff);
  CHECK(aff_ext(2.0) == aff(1.0));
  CHECK(aff_ext(-3.0) == aff(0.0));
  CHECK(aff_ext(1.0 + 1e-12) == doctest::Approx(aff(1.0)));
  CHECK(aff_ext(-1e-12) == doctest::Approx(aff(0.0)));
}

TEST_CASE("table feedback interpolates") {
  auto tab = FeedbackFn::table({0.0, 1.0, 2.0}, {3.0, 1.0, 0.5});
  CHECK(tab(0.5) == doctest::Approx(2.0));
  CHECK(tab(1.5) == doctest::Approx(0.75));
  CHECK_THROWS_AS(FeedbackFn::table({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("steady state of a constant production") {
  Vector mu(1);
  mu << 1.0;
  auto spec = chain(mu, Vector(0), FeedbackFn::affine(0.0, 2.5));
  auto ss = steady_state(spec);
  CHECK(ss.xbar(0) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("steady state of a normalised chain is the scale vector") {
  Vector mu(3), alpha(2);
  mu << 2.0, 1.0, 3.0;
  alpha << 2.0, 6.0;
  auto spec = chain(mu, alpha, FeedbackFn::hill(0.5, 1.3, 2.0));
  auto ss = steady_state(spec);
  CHECK(ss.delta(2) == 1.0);
  CHECK(rhs_at_rest(spec, ss.xbar).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ss.xbar(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ss.xbar(0) == doctest::Approx(ss.delta(0)).epsilon(1e-12));
  CHECK(ss.xbar(1) == doctest::Approx(ss.delta(1)).epsilon(1e-12));

  // alpha_j = mu_j gives delta = 1 and xbar = (1, ..., 1).
  Vector same(2);
  same << 1.0, 3.0;
  auto ones = steady_state(chain(mu, same, FeedbackFn::hill(2.0, 0.7, 3.0)));
  CHECK((ones.xbar - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("steady state rejects increasing feedback") {
  Vector mu(1);
  mu << 1.0;
  auto spec = chain(mu, Vector(0), FeedbackFn::table({0.0, 1.0, 5.0}, {1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(steady_state(spec), std::invalid_argument);
}

TEST_CASE("validate rejects malformed cascades") {
  Vector mu(2), alpha(1);
  mu << 1.0, -1.0;
  alpha << 1.0;
  CHECK_THROWS_AS(validate(chain(mu, alpha, FeedbackFn::hill(1.0, 1.0, 2.0))), std::invalid_argument);
  mu << 1.0, 1.0;
  auto spec = chain(mu, alpha, FeedbackFn::hill(1.0, 1.0, 2.0));
  spec.kernels.pop_back();
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("rescaling: rates, inflection and the h = 2 boundary") {
  Hes1RawParams raw;
  raw.k_p = raw.k_r = 2.3;
  CHECK(rescale_hes1(raw).mu == doctest::Approx(1.0));

  for (double h : {1.5, 2.0, 3.0, 5.0}) {
    Hes1RawParams inf;
    inf.h = h;
    inf.alpha = 2.0;
    inf.beta = 0.5;
    inf.k_r = 1.5;
    inf.k_p = 0.8;
    const double ratio = (h + 1.0) / (2.0 * h) * std::pow((h + 1.0) / (h - 1.0), 1.0 / h);
    CHECK(hes1_inflection_ratio(h) == doctest::Approx(ratio).epsilon(1e-14));
    inf.k_half = ratio * inf.alpha * inf.beta / (inf.k_p * inf.k_r);
    auto res = rescale_hes1(inf);
    CHECK(res.p_bar == doctest::Approx(inf.k_half * std::pow((h - 1.0) / (h + 1.0), 1.0 / h)).epsilon(1e-10));
    CHECK(res.b == doctest::Approx(std::pow((1.0 + h) / (h - 1.0), 1.0 / h)).epsilon(1e-10));
  }

  Hes1RawParams h2;
  h2.h = 2.0;
  h2.k_half = 5.0 * std::sqrt(5.0) / 18.0;
  CHECK(std::abs(rescale_hes1(h2).b - std::sqrt(5.0) / 2.0) < 1e-9);
}

TEST_CASE("rescaled steady state is (mu, 1)") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    auto raw = random_raw(rng);
    auto res = rescale_hes1(raw);
    auto ss = steady_state(res.spec);
    CHECK(std::abs(ss.xbar(0) - res.mu) < 1e-9);
    CHECK(std::abs(ss.xbar(1) - 1.0) < 1e-9);
    // Raw balance: alpha k^h/(k^h + p^h) = k_r k_p p / beta.
    const double lhs = hes1_raw_feedback(raw, res.p_bar);
    CHECK(std::abs(lhs - raw.k_r * raw.k_p * res.p_bar / raw.beta) < 1e-10 * std::max(1.0, lhs));
  }
}

TEST_CASE("rescaling is a change of units of the raw system") {
  Hes1RawParams raw;
  raw.alpha = 2.0;
  raw.k_half = 0.9;
  raw.h = 3.0;
  raw.beta = 0.7;
  raw.k_r = 1.25;
  raw.k_p = 0.6;
  raw.tau_r = 0.8;
  auto res = rescale_hes1(raw);

  const double step = 0.01;
  const double m0 = 0.4, p0 = 1.1;
  const int lag = static_cast<int>(std::lround(raw.tau_r / step));
  DelayRhs rhs = [&](double, const Vector& x, const DelayedState& past, Vector& dx) {
    dx(0) = hes1_raw_feedback(raw, past.at_lag(1, -lag)) - raw.k_r * x(0);
    dx(1) = raw.beta * x(0) - raw.k_p * x(1);
  };
  Vector phi(2);
  phi << m0, p0;
  auto raw_traj = integrate_rhs(rhs, 2, raw.tau_r, InitialHistory::constant(phi, raw.tau_r), 8.0, step);

  const double c = raw.k_r * res.p_bar / raw.beta;
  Vector psi(2);
  psi << m0 / c, p0 / res.p_bar;
  auto dim = integrate(res.spec, InitialHistory::constant(psi, res.tau), 8.0 * raw.k_r, step * raw.k_r);

  REQUIRE(dim.size() == raw_traj.size());
  for (long i = 0; i < dim.size(); i += 25) {
    CHECK(std::abs(dim.history.state(i)(0) * c - raw_traj.history.state(i)(0)) < 1e-9);
    CHECK(std::abs(dim.history.state(i)(1) * res.p_bar - raw_traj.history.state(i)(1)) < 1e-9);
  }
}
