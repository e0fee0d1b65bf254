#ifndef CASCADE_STABILITY_HPP
#define CASCADE_STABILITY_HPP

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cascade/kernels.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// Linearisation of the cascade at its steady state: rates mu_j, slopes
/// gamma_j = f_j'(0) of the translated system, and (optionally) the Dirac
/// delay of each equation.
struct LinearizationData {
  Vector mu;
  Vector gamma;
  /// tau_j >= 0 per equation; the characteristic function only sees the sum.
  std::optional<Vector> tau_points;
  /// False when some kernel is genuinely distributed.
  bool point_delays = true;

  double total_delay() const { return tau_points ? tau_points->sum() : 0.0; }
};

void validate(const LinearizationData& data);

enum class Verdict {
  GloballyStable,
  DelayIndependentUnstable,
  HopfBoundary,
  UnstableAllDelays,
  Inconclusive,
};

std::string to_string(Verdict v);

struct StabilityReport {
  Verdict verdict = Verdict::Inconclusive;
  double gamma_product = 0.0;
  double mu_product = 0.0;
  std::optional<double> omega0;
  std::optional<double> tau_cr;
  std::vector<std::string> notes;
};

/// alpha_1 ... alpha_k <= mu_1 ... mu_k, compared in log space. Throws
/// std::invalid_argument for a negative slope or nonpositive rate.
bool check_global(const Vector& alphas, const Vector& mus);

/// prod (omega^2 + mu_j^2) - Gamma^2.
double char_F(double omega, const LinearizationData& data);

/// Unique positive root of char_F. Requires |Gamma| > prod mu; the slope at
/// the root is checked positive.
double omega0(const LinearizationData& data);

/// Whether all roots of prod (lambda + mu_j) - Gamma lie in Re < 0
/// (companion-matrix eigenvalues).
bool zero_delay_stable(const LinearizationData& data);

/// Smallest delay with a root i*omega0: Arg(Gamma / prod(i omega0 + mu_j)) / omega0,
/// Arg in (0, 2 pi]. Requires Gamma < 0, |Gamma| > prod mu and a stable
/// delay-free system.
double tau_critical(const LinearizationData& data);

/// Trichotomy for the linearised cascade. `alphas` are cone slopes of the
/// nonlinear system; without them the linear slopes |gamma_j| are used and
/// exact ties are left Inconclusive.
StabilityReport classify(const LinearizationData& data,
                         const std::optional<Vector>& alphas = std::nullopt);

/// W(i omega) = prod (i omega + mu_j) - prod gamma_j eta_j(i omega). With no
/// kernels the Dirac offsets in data.tau_points are used (zero delay when
/// absent).
std::complex<double> char_W(double omega, const LinearizationData& data,
                            const std::vector<DelayKernel>& kernels = {});

struct MikhailovResult {
  double arg_change = 0.0;
  /// Argument change over the last decade [omega_max / 10, omega_max].
  double tail_drift = 0.0;
  bool stable = false;
};

/// Unwrapped argument change of W(i omega) over [0, omega_max] on a uniform
/// grid of `samples` points. Throws std::invalid_argument when the tail has
/// not settled (drift >= 0.01 rad) or a step jumps by more than 0.9 pi.
MikhailovResult mikhailov_argument(const LinearizationData& data,
                                   const std::vector<DelayKernel>& kernels, double omega_max,
                                   int samples);

}  // namespace cascade

#endif  // CASCADE_STABILITY_HPP
