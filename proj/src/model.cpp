#include "cascade/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cascade/roots.hpp"

namespace cascade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

double table_eval(const TableFeedback& t, double x) {
  auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
  if (it == t.xs.begin()) return t.ys.front();
  if (it == t.xs.end()) return t.ys.back();
  const std::size_t i = static_cast<std::size_t>(it - t.xs.begin());
  const double w = (x - t.xs[i - 1]) / (t.xs[i] - t.xs[i - 1]);
  return (1.0 - w) * t.ys[i - 1] + w * t.ys[i];
}

double table_slope(const TableFeedback& t, double x) {
  auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - t.xs.begin());
  i = std::clamp<std::size_t>(i, 1, t.xs.size() - 1);
  return (t.ys[i] - t.ys[i - 1]) / (t.xs[i] - t.xs[i - 1]);
}

}  // namespace

FeedbackFn::FeedbackFn(Variant v, Interval domain) : variant_(std::move(v)), domain_(domain) {
  if (!(domain_.lo <= domain_.hi)) invalid("feedback domain is empty");
}

FeedbackFn FeedbackFn::hill(double mu, double b, double h) {
  if (!(mu > 0.0 && b > 0.0 && h > 0.0) || !std::isfinite(mu) || !std::isfinite(b) ||
      !std::isfinite(h)) {
    invalid("Hill feedback needs mu > 0, b > 0, h > 0");
  }
  return FeedbackFn(HillFeedback{mu, b, h}, {0.0, kInf});
}

FeedbackFn FeedbackFn::table(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size()) invalid("feedback table needs >= 2 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) invalid("non-finite feedback table entry");
    if (i > 0 && !(xs[i] > xs[i - 1])) invalid("feedback table abscissae must increase");
  }
  const Interval dom{xs.front(), xs.back()};
  return FeedbackFn(TableFeedback{std::move(xs), std::move(ys)}, dom);
}

FeedbackFn FeedbackFn::affine(double slope, double intercept, Interval domain) {
  return FeedbackFn(AffineFeedback{slope, intercept}, domain);
}

double FeedbackFn::clamp_arg(double x) const {
  if (domain_.contains(x)) return x;
  if (!extended_) {
    std::ostringstream msg;
    msg << "feedback evaluated at " << x << " outside [" << domain_.lo << ", " << domain_.hi
        << "]";
    throw std::domain_error(msg.str());
  }
  return std::clamp(x, domain_.lo, domain_.hi);
}

double FeedbackFn::eval_inside(double x) const {
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HillFeedback>) {
          const double bh = std::pow(v.b, v.h);
          return v.mu * (bh + 1.0) / (bh + std::pow(x, v.h));
        } else if constexpr (std::is_same_v<T, TableFeedback>) {
          return table_eval(v, x);
        } else {
          return v.slope * x + v.intercept;
        }
      },
      variant_);
}

double FeedbackFn::operator()(double x) const { return eval_inside(clamp_arg(x)); }

double FeedbackFn::derivative(double x) const {
  if (extended_ && !domain_.contains(x)) return 0.0;
  const double xc = clamp_arg(x);
  return std::visit(
      [xc](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HillFeedback>) {
          return hill_jet(xc, v.mu, v.b, v.h).df;
        } else if constexpr (std::is_same_v<T, TableFeedback>) {
          return table_slope(v, xc);
        } else {
          return v.slope;
        }
      },
      variant_);
}

FeedbackFn clamp_extend(const FeedbackFn& f) {
  FeedbackFn out = f;
  out.extended_ = true;
  return out;
}

HillJet<double> hill_derivatives(double xi, const FeedbackFn& fb) {
  const auto* hill = fb.as_hill();
  if (hill == nullptr) throw std::domain_error("hill_derivatives: feedback is not a Hill function");
  if (!(xi >= 0.0)) throw std::domain_error("hill_derivatives: xi must be >= 0");
  if (hill->h < 1.0) invalid("hill_derivatives: requires h >= 1");
  return hill_jet(xi, hill->mu, hill->b, hill->h);
}

void validate(const CascadeSpec& spec) {
  if (spec.k < 1) invalid("cascade: k must be >= 1");
  const auto k = static_cast<Eigen::Index>(spec.k);
  if (spec.mu.size() != k) invalid("cascade: mu must have k entries");
  if (spec.alpha.size() != k - 1) invalid("cascade: alpha must have k-1 entries");
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(spec.mu(j) > 0.0) || !std::isfinite(spec.mu(j))) {
      invalid("cascade: mu[" + std::to_string(j) + "] must be positive");
    }
  }
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    if (!(spec.alpha(j) > 0.0) || !std::isfinite(spec.alpha(j))) {
      invalid("cascade: alpha[" + std::to_string(j) + "] must be positive");
    }
  }
  if (spec.kernels.size() != static_cast<std::size_t>(spec.k)) {
    invalid("cascade: need one delay kernel per equation");
  }
  for (const auto& kern : spec.kernels) {
    if (kern.tau_max() != spec.kernels.front().tau_max()) {
      invalid("cascade: kernels must share a common tau_max");
    }
  }
}

Vector scale_factors(const CascadeSpec& spec) {
  const auto k = static_cast<Eigen::Index>(spec.k);
  Vector delta(k);
  delta(k - 1) = 1.0;
  for (Eigen::Index j = k - 2; j >= 0; --j) {
    delta(j) = delta(j + 1) * spec.mu(j + 1) / spec.alpha(j);
  }
  return delta;
}

double solve_balance(const std::function<double(double)>& f, double slope, double upper,
                     double tol) {
  if (!(tol > 0.0)) invalid("steady state: tol must be positive");
  if (!(slope > 0.0)) invalid("steady state: balance slope must be positive");
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  if (!(upper > 0.0) || !std::isfinite(upper)) {
    throw BracketError(f0, f0, "steady state: empty bracket (sup f <= 0)");
  }
  constexpr int kSamples = 256;
  double prev = f0;
  const double scale = std::max(1.0, std::abs(f0));
  for (int i = 1; i < kSamples; ++i) {
    const double x = upper * static_cast<double>(i) / (kSamples - 1);
    const double fx = f(x);
    if (fx > prev + 1e-12 * scale) {
      std::ostringstream msg;
      msg << "steady state: feedback is not nonincreasing near x = " << x;
      invalid(msg.str());
    }
    prev = fx;
  }
  const auto residual = [&](double x) { return f(x) - slope * x; };
  const double x = bisect(residual, 0.0, upper);
  if (std::abs(residual(x)) > tol * std::max(1.0, std::abs(f0))) {
    std::ostringstream msg;
    msg << "steady state: residual " << residual(x) << " exceeds tolerance " << tol;
    throw BracketError(residual(0.0), residual(upper), msg.str());
  }
  return x;
}

SteadyState steady_state(const CascadeSpec& spec, double tol) {
  validate(spec);
  const Vector delta = scale_factors(spec);
  const double slope = spec.mu(0) * delta(0);
  const FeedbackFn f = clamp_extend(spec.feedback);
  const double sup_f = f(std::max(0.0, spec.feedback.domain().lo));
  const double xk = solve_balance([&](double x) { return f(x); }, slope, sup_f / slope, tol);
  SteadyState ss;
  ss.delta = delta;
  ss.xbar = delta * xk;
  return ss;
}

void validate(const Hes1RawParams& raw) {
  const double vals[] = {raw.alpha, raw.k_half, raw.h, raw.beta, raw.k_r, raw.k_p, raw.tau_r};
  const char* names[] = {"alpha", "k", "h", "beta", "k_r", "k_p", "tau_r"};
  for (int i = 0; i < 7; ++i) {
    if (!(vals[i] > 0.0) || !std::isfinite(vals[i])) {
      invalid(std::string("hes1.") + names[i] + " must be positive");
    }
  }
  if (raw.h < 1.0) invalid("hes1.h must be >= 1");
}

double hes1_ratio(const Hes1RawParams& raw) {
  return raw.k_half * raw.k_p * raw.k_r / (raw.alpha * raw.beta);
}

double hes1_raw_feedback(const Hes1RawParams& raw, double p) {
  const double kh = std::pow(raw.k_half, raw.h);
  return raw.alpha * kh / (kh + std::pow(std::max(p, 0.0), raw.h));
}

Hes1Rescaled rescale_hes1(const Hes1RawParams& raw, double tol) {
  validate(raw);
  const double slope = raw.k_p * raw.k_r / raw.beta;
  const double p_bar = solve_balance([&](double p) { return hes1_raw_feedback(raw, p); }, slope,
                                     raw.alpha / slope, tol);
  Hes1Rescaled out;
  out.mu = raw.k_p / raw.k_r;
  out.b = raw.k_half / p_bar;
  out.h = raw.h;
  out.tau = raw.k_r * raw.tau_r;
  out.p_bar = p_bar;
  out.spec.k = 2;
  out.spec.mu = Vector(2);
  out.spec.mu << 1.0, out.mu;
  out.spec.alpha = Vector::Ones(1);
  out.spec.feedback = FeedbackFn::hill(out.mu, out.b, out.h);
  out.spec.kernels = {DelayKernel::dirac(-out.tau, out.tau), DelayKernel::dirac(0.0, out.tau)};
  return out;
}

double hes1_inflection_ratio(double h) {
  if (!(h > 1.0)) invalid("inflection ratio requires h > 1");
  return (h + 1.0) / (2.0 * h) * std::pow((h + 1.0) / (h - 1.0), 1.0 / h);
}

}  // namespace cascade
