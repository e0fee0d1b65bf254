#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cascade/solver.hpp"
#include "cascade/stability.hpp"

using namespace cascade;
using std::numbers::pi;

namespace {

LinearizationData lin(std::initializer_list<double> mu, double gamma_product,
                      std::optional<double> tau = std::nullopt) {
  LinearizationData d;
  d.mu = Vector(static_cast<Eigen::Index>(mu.size()));
  int i = 0;
  for (double m : mu) d.mu(i++) = m;
  d.gamma = Vector::Ones(d.mu.size());
  d.gamma(0) = gamma_product;
  if (tau) {
    d.tau_points = Vector::Zero(d.mu.size());
    (*d.tau_points)(0) = *tau;
  }
  return d;
}

// Chebyshev differentiation matrix on N+1 Gauss-Lobatto points, x_0 = 1.
Matrix cheb(int n, Vector& x) {
  x = Vector(n + 1);
  for (int j = 0; j <= n; ++j) x(j) = std::cos(pi * j / n);
  Matrix d = Matrix::Zero(n + 1, n + 1);
  auto c = [&](int j) { return (j == 0 || j == n ? 2.0 : 1.0) * (j % 2 ? -1.0 : 1.0); };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (i != j) d(i, j) = c(i) / c(j) / (x(i) - x(j));
    }
  }
  // Negative row sums on the diagonal.
  for (int i = 0; i <= n; ++i) d(i, i) = -d.row(i).sum();
  return d;
}

// Rightmost characteristic root of the linear cascade with the whole delay
// on the feedback, from a pseudospectral discretisation of the solution
// operator's generator on [-tau, 0].
double rightmost_real_part(const LinearizationData& data, double tau, int n = 40) {
  const int k = static_cast<int>(data.mu.size());
  Vector x;
  const Matrix d = cheb(n, x) * (2.0 / tau);
  Matrix a0 = Matrix::Zero(k, k), a1 = Matrix::Zero(k, k);
  for (int j = 0; j < k; ++j) a0(j, j) = -data.mu(j);
  for (int j = 1; j < k; ++j) a0(j, j - 1) = data.gamma(j);
  a1(0, k - 1) = data.gamma(0);

  const int size = (n + 1) * k;
  Matrix gen = Matrix::Zero(size, size);
  // Node 0 is theta = 0, node n is theta = -tau.
  gen.block(0, 0, k, k) = a0;
  gen.block(0, n * k, k, k) += a1;
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      gen.block(i * k, j * k, k, k) = d(i, j) * Matrix::Identity(k, k);
    }
  }
  Eigen::EigenSolver<Matrix> es(gen, false);
  return es.eigenvalues().real().maxCoeff();
}

// First delay where the rightmost root crosses the imaginary axis.
double oracle_tau_cr(const LinearizationData& data, double tau_hi) {
  double lo = 1e-3, hi = tau_hi;
  REQUIRE(rightmost_real_part(data, lo) < 0.0);
  REQUIRE(rightmost_real_part(data, hi) > 0.0);
  // Coarse scan first so the bisection brackets the first crossing.
  const int scan = 200;
  for (int i = 1; i <= scan; ++i) {
    const double t = lo + (tau_hi - lo) * i / scan;
    if (rightmost_real_part(data, t) > 0.0) {
      hi = t;
      lo = lo + (tau_hi - lo) * (i - 1) / scan;
      break;
    }
  }
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rightmost_real_part(data, mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Linear DDE x1' = -mu1 x1 + Gamma x_k(t - tau), x_j' = x_{j-1} - mu_j x_j.
// Returns late amplitude over early amplitude.
double amplitude_growth(const LinearizationData& data, double tau) {
  const int k = static_cast<int>(data.mu.size());
  CascadeSpec spec;
  spec.k = k;
  spec.mu = data.mu;
  spec.alpha = data.gamma.tail(k - 1);
  spec.feedback = FeedbackFn::affine(data.gamma(0), 0.0, {-1e300, 1e300});
  spec.kernels.push_back(DelayKernel::dirac(-tau, tau));
  for (int j = 1; j < k; ++j) spec.kernels.push_back(DelayKernel::dirac(0.0, tau));
  IntegrateOptions opts;
  opts.check_positivity = false;
  Vector phi = Vector::Zero(k);
  phi(0) = 1.0;
  const double period = 2.0 * pi / omega0(data);
  const double window = 3.0 * std::max(period, tau);
  const double t_end = 20.0 * window;
  auto traj = integrate(spec, InitialHistory::constant(phi, tau), t_end, tau / 64.0, opts);
  double early = 0.0, late = 0.0;
  for (long i = 0; i < traj.size(); ++i) {
    const double t = traj.history.time(i);
    const double v = traj.history.state(i).cwiseAbs().maxCoeff();
    if (t >= window && t < 2.0 * window) early = std::max(early, v);
    if (t >= t_end - window) late = std::max(late, v);
  }
  return late / early;
}

}  // namespace

TEST_CASE("check_global") {
  Vector a(2), m(2);
  a << 1.5, 0.7;
  CHECK(check_global(a, a));
  a << 0.0, 5.0;
  m << 1.0, 1.0;
  CHECK(check_global(a, m));
  a << 2.0, 1.0;
  CHECK_FALSE(check_global(a, m));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 50; ++t) {
    Vector al(4), mu(4);
    for (int j = 0; j < 4; ++j) { al(j) = u(rng); mu(j) = u(rng); }
    Vector pa(4), pm(4);
    const int perm[4] = {2, 0, 3, 1};
    for (int j = 0; j < 4; ++j) { pa(j) = al(perm[j]); pm(j) = mu(perm[j]); }
    CHECK(check_global(al, mu) == check_global(pa, pm));
  }
  a << -1.0, 1.0;
  CHECK_THROWS_AS(check_global(a, m), std::invalid_argument);
}

TEST_CASE("characteristic function F") {
  CHECK(char_F(0.0, lin({1, 1}, -2)) == doctest::Approx(-3.0));
  CHECK(std::abs(char_F(1.0, lin({1, 1}, -2))) < 1e-15);
  CHECK(std::abs(char_F(0.0, lin({2, 3}, 6))) < 1e-15);
}

TEST_CASE("omega0") {
  CHECK(std::abs(omega0(lin({1, 1}, -2)) - 1.0) < 1e-12);
  // (w^2 + 1)(w^2 + 4) = 9 is s^2 + 5 s - 5 = 0 in s = w^2.
  CHECK(std::abs(omega0(lin({1, 2}, -3)) - std::sqrt((-5.0 + std::sqrt(45.0)) / 2.0)) < 1e-9);
  const double w = omega0(lin({1, 1}, -1.0000001));
  CHECK(w > 0.0);
  CHECK(w < 1e-2);
  CHECK_THROWS_AS(omega0(lin({1, 1}, -0.5)), std::invalid_argument);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 3.0), s(1.05, 6.0);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + t % 4;
    LinearizationData d;
    d.mu = Vector(k);
    for (int j = 0; j < k; ++j) d.mu(j) = u(rng);
    d.gamma = Vector::Ones(k);
    d.gamma(0) = -s(rng) * d.mu.prod();
    const double g = d.gamma.prod();
    const double w0 = omega0(d);
    CHECK(std::abs(char_F(w0, d)) <= 1e-10 * (1.0 + g * g));
    const double dw = 1e-6 * std::max(1.0, w0);
    CHECK(char_F(w0 + dw, d) > char_F(w0 - dw, d));
  }
}

TEST_CASE("critical delay for mu = (1, 1), Gamma = -2") {
  const auto d = lin({1, 1}, -2);
  CHECK(std::abs(tau_critical(d) - pi / 2.0) < 1e-9);
  // The independent root oracle fixes the branch of Arg.
  CHECK(std::abs(oracle_tau_cr(d, 3.0 * pi) - pi / 2.0) < 1e-6);
}

TEST_CASE("critical delay agrees with the pseudospectral root oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.5, 2.0), s(1.3, 4.0);
  for (int t = 0; t < 8; ++t) {
    const int k = 2 + t % 2;
    LinearizationData d;
    d.mu = Vector(k);
    for (int j = 0; j < k; ++j) d.mu(j) = u(rng);
    d.gamma = Vector::Ones(k);
    d.gamma(0) = -s(rng) * d.mu.prod();
    if (!zero_delay_stable(d)) continue;
    const double tc = tau_critical(d);
    CHECK(std::abs(oracle_tau_cr(d, 3.0 * tc) - tc) < 1e-6 * std::max(1.0, tc));
  }
}

TEST_CASE("critical delay scaling and blow-up near the boundary") {
  const auto base = lin({1, 2}, -5);
  const double tc = tau_critical(base);
  for (double c : {0.5, 3.0}) {
    const auto scaled = lin({c, 2 * c}, -5 * c * c);
    CHECK(std::abs(c * tau_critical(scaled) - tc) < 1e-10 * tc);
  }
  double prev = 0.0;
  for (double eps : {1e-1, 1e-3, 1e-5, 1e-7, 1e-9}) {
    const double t = tau_critical(lin({1, 1}, -1.0 - eps));
    CHECK(t > prev);
    prev = t;
  }
  CHECK(prev > 1e3);
}

TEST_CASE("zero-delay stability") {
  CHECK(zero_delay_stable(lin({1, 1}, -5)));
  // (lambda + 1)^3 = -9 has a root with positive real part.
  CHECK_FALSE(zero_delay_stable(lin({1, 1, 1}, -9)));
  CHECK(zero_delay_stable(lin({1, 1, 1}, -7)));
  CHECK(classify(lin({1, 1, 1}, -9)).verdict == Verdict::UnstableAllDelays);
}

TEST_CASE("classify") {
  Vector alphas(2);
  alphas << 0.5, 1.0;
  CHECK(classify(lin({1, 1}, 0.5), alphas).verdict == Verdict::GloballyStable);
  CHECK(classify(lin({1, 1}, 2)).verdict == Verdict::DelayIndependentUnstable);

  auto hopf = classify(lin({1, 1}, -2));
  CHECK(hopf.verdict == Verdict::HopfBoundary);
  REQUIRE(hopf.omega0.has_value());
  REQUIRE(hopf.tau_cr.has_value());
  CHECK(*hopf.omega0 == doctest::Approx(1.0));
  CHECK(*hopf.tau_cr == doctest::Approx(pi / 2.0));

  // Sign of Gamma does not matter inside the global region.
  for (double g : {0.1, 0.5, 0.99}) {
    CHECK(classify(lin({1, 1}, g)).verdict == classify(lin({1, 1}, -g)).verdict);
  }
  // Boundary tie needs cone slopes.
  CHECK(classify(lin({1, 1}, -1)).verdict == Verdict::Inconclusive);
  Vector tight(2);
  tight << 1.0, 1.0;
  CHECK(classify(lin({1, 1}, -1), tight).verdict == Verdict::GloballyStable);
  CHECK(to_string(Verdict::HopfBoundary) == "HopfBoundary");
}

TEST_CASE("Mikhailov argument") {
  auto stable = mikhailov_argument(lin({1, 1}, -0.5, 0.0), {}, 1e4, 200000);
  CHECK(std::abs(stable.arg_change - pi) < 0.05);
  CHECK(stable.stable);

  auto unstable = mikhailov_argument(lin({1, 1}, 2), {}, 1e4, 200000);
  CHECK(std::abs(unstable.arg_change - pi) > 0.05);
  CHECK_FALSE(unstable.stable);

  auto free = mikhailov_argument(lin({1, 2, 3}, 0), {}, 1e4, 200000);
  CHECK(std::abs(free.arg_change - 1.5 * pi) < 0.05);

  // Across the Hopf boundary with point delays given as kernels.
  for (double factor : {0.9, 1.1}) {
    const double tau = factor * pi / 2.0;
    std::vector<DelayKernel> kernels{DelayKernel::dirac(-tau, tau), DelayKernel::dirac(0.0, tau)};
    auto r = mikhailov_argument(lin({1, 1}, -2), kernels, 1e4, 400000);
    CHECK(r.stable == (factor < 1.0));
  }
}

TEST_CASE("simulated linear cascades switch at the critical delay") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.5, 2.0), s(1.5, 4.0);
  int checked = 0;
  while (checked < 50) {
    LinearizationData d;
    d.mu = Vector(2);
    d.mu << u(rng), u(rng);
    d.gamma = Vector::Ones(2);
    d.gamma(0) = -s(rng) * d.mu.prod();
    const double tc = tau_critical(d);
    CHECK(amplitude_growth(d, 0.9 * tc) < 1.0);
    CHECK(amplitude_growth(d, 1.1 * tc) > 1.0);
    ++checked;
  }
}
