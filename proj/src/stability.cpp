#include "cascade/stability.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cascade/roots.hpp"

namespace cascade {

namespace {

constexpr double kTie = 1e-12;

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

double gamma_prod(const LinearizationData& d) { return d.gamma.prod(); }
double mu_prod(const LinearizationData& d) { return d.mu.prod(); }

std::complex<double> poly_at(const Vector& mu, std::complex<double> lambda) {
  std::complex<double> p = 1.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) p *= lambda + mu(j);
  return p;
}

}  // namespace

void validate(const LinearizationData& data) {
  const Eigen::Index k = data.mu.size();
  if (k < 1) invalid("linearization: need at least one equation");
  if (data.gamma.size() != k) invalid("linearization: gamma must have k entries");
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(data.mu(j) > 0.0) || !std::isfinite(data.mu(j))) {
      invalid("linearization: mu[" + std::to_string(j) + "] must be positive");
    }
    if (!std::isfinite(data.gamma(j))) invalid("linearization: gamma must be finite");
  }
  if (data.tau_points) {
    if (data.tau_points->size() != k) invalid("linearization: tau_points must have k entries");
    if ((data.tau_points->array() < 0.0).any()) {
      invalid("linearization: tau_points must be nonnegative");
    }
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::GloballyStable: return "GloballyStable";
    case Verdict::DelayIndependentUnstable: return "DelayIndependentUnstable";
    case Verdict::HopfBoundary: return "HopfBoundary";
    case Verdict::UnstableAllDelays: return "UnstableAllDelays";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

bool check_global(const Vector& alphas, const Vector& mus) {
  if (alphas.size() != mus.size()) invalid("check_global: alphas and mus differ in length");
  double log_a = 0.0, log_m = 0.0, scale = 0.0;
  bool zero = false;
  for (Eigen::Index j = 0; j < alphas.size(); ++j) {
    if (!(alphas(j) >= 0.0)) invalid("check_global: alpha[" + std::to_string(j) + "] < 0");
    if (!(mus(j) > 0.0)) invalid("check_global: mu[" + std::to_string(j) + "] must be positive");
    if (alphas(j) == 0.0) {
      zero = true;
      continue;
    }
    log_a += std::log(alphas(j));
    log_m += std::log(mus(j));
    scale += std::abs(std::log(alphas(j))) + std::abs(std::log(mus(j)));
  }
  if (zero) return true;
  // Summation order must not flip an exact tie.
  return log_a <= log_m + 8.0 * std::numeric_limits<double>::epsilon() * scale;
}

double char_F(double omega, const LinearizationData& data) {
  double p = 1.0;
  for (Eigen::Index j = 0; j < data.mu.size(); ++j) p *= omega * omega + data.mu(j) * data.mu(j);
  const double g = gamma_prod(data);
  return p - g * g;
}

double omega0(const LinearizationData& data) {
  validate(data);
  const double f0 = char_F(0.0, data);
  if (!(f0 < 0.0)) {
    std::ostringstream msg;
    msg << "omega0: requires |Gamma| > prod mu (F(0) = " << f0 << ")";
    invalid(msg.str());
  }
  double hi = 1.0;
  int grow = 0;
  while (!(char_F(hi, data) > 0.0)) {
    hi *= 2.0;
    if (++grow > 2000) throw BracketError(f0, char_F(hi, data), "omega0: no upper bracket");
  }
  const double w = bisect_signed([&](double om) { return char_F(om, data); }, 0.0, hi, -1);
  // F'(w) = 2 w sum_j prod_{i != j} (w^2 + mu_i^2)
  double slope = 0.0;
  for (Eigen::Index j = 0; j < data.mu.size(); ++j) {
    double p = 1.0;
    for (Eigen::Index i = 0; i < data.mu.size(); ++i) {
      if (i != j) p *= w * w + data.mu(i) * data.mu(i);
    }
    slope += p;
  }
  slope *= 2.0 * w;
  if (!(slope > 0.0)) throw std::runtime_error("omega0: transversality fails (F'(omega0) <= 0)");
  return w;
}

bool zero_delay_stable(const LinearizationData& data) {
  validate(data);
  const Eigen::Index k = data.mu.size();
  // Monic coefficients of prod (lambda + mu_j), lowest degree first.
  Vector c = Vector::Zero(k + 1);
  c(0) = 1.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = j + 1; i > 0; --i) c(i) = c(i - 1) + data.mu(j) * c(i);
    c(0) *= data.mu(j);
  }
  c(0) -= gamma_prod(data);
  Matrix comp = Matrix::Zero(k, k);
  for (Eigen::Index i = 1; i < k; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < k; ++i) comp(i, k - 1) = -c(i);
  Eigen::EigenSolver<Matrix> es(comp, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("zero_delay_stable: eigensolver failed");
  return (es.eigenvalues().real().array() < 0.0).all();
}

double tau_critical(const LinearizationData& data) {
  validate(data);
  const double g = gamma_prod(data);
  const double m = mu_prod(data);
  if (!(g < 0.0)) invalid("tau_critical: requires Gamma < 0");
  if (!(std::abs(g) > m)) invalid("tau_critical: requires |Gamma| > prod mu");
  if (!zero_delay_stable(data)) invalid("tau_critical: delay-free system is not stable");
  const double w = omega0(data);
  const std::complex<double> p = poly_at(data.mu, {0.0, w});
  double arg = std::arg(std::complex<double>(g, 0.0) / p);
  if (arg <= 0.0) arg += 2.0 * std::numbers::pi;
  return arg / w;
}

StabilityReport classify(const LinearizationData& data, const std::optional<Vector>& alphas) {
  validate(data);
  StabilityReport rep;
  const double g = gamma_prod(data);
  const double m = mu_prod(data);
  rep.gamma_product = g;
  rep.mu_product = m;
  const bool tie = std::abs(std::abs(g) - m) <= kTie * m;

  if (std::abs(g) <= m || tie) {
    if (alphas) {
      if (check_global(*alphas, data.mu)) {
        rep.verdict = Verdict::GloballyStable;
        rep.notes.push_back("cone_slopes_confirm");
      } else {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push_back("cone_slopes_exceed_rates");
      }
    } else if (tie) {
      rep.verdict = Verdict::Inconclusive;
      rep.notes.push_back("boundary_tie_without_cone_slopes");
    } else {
      rep.verdict = Verdict::GloballyStable;
      rep.notes.push_back("linear_slopes_used");
    }
    return rep;
  }
  if (g > 0.0) {
    rep.verdict = Verdict::DelayIndependentUnstable;
    rep.notes.push_back("W(0)<0");
    return rep;
  }
  if (!data.point_delays) {
    rep.verdict = Verdict::Inconclusive;
    rep.notes.push_back("distributed_kernels_no_hopf_formula");
    return rep;
  }
  if (!zero_delay_stable(data)) {
    rep.verdict = Verdict::UnstableAllDelays;
    rep.notes.push_back("delay_free_unstable");
    return rep;
  }
  rep.verdict = Verdict::HopfBoundary;
  rep.omega0 = omega0(data);
  rep.tau_cr = tau_critical(data);
  if (data.tau_points) {
    const double tau = data.total_delay();
    rep.notes.push_back(tau < *rep.tau_cr ? "tau_below_critical" : "tau_at_or_above_critical");
  }
  return rep;
}

std::complex<double> char_W(double omega, const LinearizationData& data,
                            const std::vector<DelayKernel>& kernels) {
  const std::complex<double> lambda(0.0, omega);
  std::complex<double> eta = 1.0;
  if (!kernels.empty()) {
    if (static_cast<Eigen::Index>(kernels.size()) != data.mu.size()) {
      invalid("char_W: need one kernel per equation");
    }
    for (const auto& kern : kernels) eta *= kern.transform(lambda);
  } else if (data.tau_points) {
    eta = std::exp(-lambda * data.total_delay());
  }
  return poly_at(data.mu, lambda) - gamma_prod(data) * eta;
}

MikhailovResult mikhailov_argument(const LinearizationData& data,
                                   const std::vector<DelayKernel>& kernels, double omega_max,
                                   int samples) {
  validate(data);
  if (!(omega_max > 0.0)) invalid("mikhailov: omega_max must be positive");
  if (samples < 10) invalid("mikhailov: need at least 10 samples");
  const double pi = std::numbers::pi;
  std::complex<double> prev = char_W(0.0, data, kernels);
  if (std::abs(prev) == 0.0) invalid("mikhailov: W(0) = 0, argument undefined");
  double total = 0.0, at_decade = 0.0;
  bool decade_set = false;
  const double decade = omega_max / 10.0;
  for (int i = 1; i < samples; ++i) {
    const double w = omega_max * static_cast<double>(i) / (samples - 1);
    const std::complex<double> cur = char_W(w, data, kernels);
    const double step = std::arg(cur / prev);
    if (std::abs(step) > 0.9 * pi) {
      std::ostringstream msg;
      msg << "mikhailov: sampling too coarse near omega = " << w;
      invalid(msg.str());
    }
    total += step;
    if (!decade_set && w >= decade) {
      at_decade = total;
      decade_set = true;
    }
    prev = cur;
  }
  MikhailovResult res;
  res.arg_change = total;
  res.tail_drift = std::abs(total - at_decade);
  if (res.tail_drift >= 0.01) {
    std::ostringstream msg;
    msg << "mikhailov: omega_max too small, last-decade drift " << res.tail_drift << " rad";
    invalid(msg.str());
  }
  res.stable = std::abs(total - static_cast<double>(data.mu.size()) * pi / 2.0) < 0.05;
  return res;
}

}  // namespace cascade
