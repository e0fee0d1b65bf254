#include "cascade/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cascade/hill.hpp"

namespace cascade {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kProductTie = 1e-12;

[[noreturn]] void invalid(const std::string& msg) { throw std::invalid_argument(msg); }

int upstream(int j, int k) { return (j + k - 1) % k; }

// Van der Corput sequence in base 2, mapped to [-r, r].
double quasi_point(int i, double r) {
  double v = 0.0, f = 0.5;
  for (unsigned n = static_cast<unsigned>(i) + 1; n > 0; n >>= 1, f *= 0.5) {
    if (n & 1U) v += f;
  }
  return (2.0 * v - 1.0) * r;
}

// sup |h(x)| over [-r, r]: exact for monotone h, sampled otherwise.
std::pair<double, double> image_bound(const ScalarMap& h, bool monotone, double r, int samples) {
  double best = std::abs(h(r)), arg = r;
  const double lo = std::abs(h(-r));
  if (lo > best) {
    best = lo;
    arg = -r;
  }
  if (monotone) return {best, arg};
  const double at0 = std::abs(h(0.0));
  if (at0 > best) {
    best = at0;
    arg = 0.0;
  }
  for (int i = 0; i < samples; ++i) {
    const double x = quasi_point(i, r);
    const double v = std::abs(h(x));
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  return {best, arg};
}

}  // namespace

Vector CycleMap::apply(const Vector& y) const {
  const int n = k();
  if (y.size() != n) invalid("cycle map: state has wrong dimension");
  Vector out(n);
  for (int j = 0; j < n; ++j) out(j) = h[static_cast<std::size_t>(j)](y(upstream(j, n)));
  return out;
}

SlopeCheck check_slopes(const CycleMap& map, const Vector& radius, bool strict_first,
                        int samples) {
  const int k = map.k();
  if (map.betas.size() != k || radius.size() != k) invalid("check_slopes: dimension mismatch");
  SlopeCheck res;
  for (int j = 0; j < k; ++j) {
    const double beta = map.betas(j);
    const double r = radius(upstream(j, k));
    const auto& h = map.h[static_cast<std::size_t>(j)];
    if (std::abs(h(0.0)) > 0.0) {
      res = {false, j, 0.0, "h_" + std::to_string(j + 1) + "(0) != 0"};
      return res;
    }
    for (int i = 0; i < samples && r > 0.0; ++i) {
      const double x = -r + 2.0 * r * (static_cast<double>(i) + 0.5) / samples;
      if (x == 0.0) continue;
      const double v = std::abs(h(x));
      const double bound = beta * std::abs(x);
      const bool strict = strict_first && j == 0;
      const bool bad = strict ? !(v < bound) : v > bound * (1.0 + 4.0 * kEps);
      if (bad) {
        std::ostringstream msg;
        msg << "|h_" << (j + 1) << "(" << x << ")| = " << v << (strict ? " >= " : " > ")
            << "beta * |x| = " << bound;
        res = {false, j, x, msg.str()};
        return res;
      }
    }
  }
  return res;
}

Vector choose_q(const Vector& betas) {
  const Eigen::Index k = betas.size();
  if (k < 1) invalid("choose_q: need at least one slope");
  if ((betas.array() < 0.0).any()) invalid("choose_q: slopes must be nonnegative");
  Vector prefix(k);
  double p = 1.0;
  for (Eigen::Index j = 0; j < k; ++j) prefix(j) = (p *= betas(j));
  if (!(prefix(k - 1) < 1.0)) invalid("choose_q: requires prod beta < 1");
  Vector eps(k);
  eps(k - 1) = 1.0 - prefix(k - 1);
  for (Eigen::Index j = k - 2; j >= 0; --j) {
    eps(j) = betas(j + 1) > 0.0 ? eps(j + 1) / (2.0 * betas(j + 1)) : eps(j + 1);
  }
  Vector q = prefix + eps;
  q(k - 1) = 1.0;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const bool upper = betas(j + 1) == 0.0 || q(j) < q(j + 1) / betas(j + 1);
    if (!(prefix(j) < q(j)) || !upper) {
      throw std::logic_error("choose_q: q_" + std::to_string(j + 1) + " violates its bounds");
    }
  }
  return q;
}

TildeMajorant::TildeMajorant(const ScalarMap& h1, double beta1, double x_max, int nodes)
    : beta_(beta1) {
  if (!(beta1 > 0.0)) invalid("tilde_majorant: beta_1 must be positive");
  if (!(x_max > 0.0)) invalid("tilde_majorant: x_max must be positive");
  if (nodes < 2) invalid("tilde_majorant: need at least 2 nodes");
  dx_ = x_max / (nodes - 1);
  xs_.resize(static_cast<std::size_t>(nodes));
  ys_.resize(xs_.size());
  ms_.resize(xs_.size());
  double run = std::abs(h1(0.0));
  if (run > 0.0) invalid("tilde_majorant: h_1(0) != 0");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    const double x = i + 1 == xs_.size() ? x_max : static_cast<double>(i) * dx_;
    xs_[i] = x;
    run = std::max({run, std::abs(h1(x)), std::abs(h1(-x))});
    if (i > 0 && !(run < beta1 * x)) {
      std::ostringstream msg;
      msg << "tilde_majorant: max |h_1| on [-" << x << ", " << x << "] = " << run
          << " >= beta_1 x = " << beta1 * x;
      invalid(msg.str());
    }
    ms_[i] = run;
    ys_[i] = 0.5 * (run + beta1 * x);
  }
}

double TildeMajorant::operator()(double x) const {
  x = std::abs(x);
  if (x >= xs_.back()) return 0.5 * (ms_.back() + beta_ * x);
  const auto i = std::min(static_cast<std::size_t>(x / dx_), xs_.size() - 2);
  const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
  return (1.0 - w) * ys_[i] + w * ys_[i + 1];
}

TildeMajorant tilde_majorant(const ScalarMap& h1, double beta1, double x_max, int nodes) {
  return TildeMajorant(h1, beta1, x_max, nodes);
}

BoxSequence box_sequence(const CycleMap& map, const Vector& k_radius, int m_max,
                         int majorant_nodes) {
  const int k = map.k();
  if (m_max < 2) invalid("box_sequence: m_max must be >= 2");
  if (k < 1 || map.betas.size() != k) invalid("box_sequence: need one slope per map");
  if (k_radius.size() != k) invalid("box_sequence: K radius has wrong dimension");
  if ((k_radius.array() < 0.0).any()) invalid("box_sequence: K radius must be >= 0");
  const double prod = map.betas.prod();
  if (prod > 1.0 + kProductTie) invalid("box_sequence: prod beta > 1");

  BoxSequence seq;
  seq.radii = Matrix(k, m_max);
  const double kmax = k_radius.maxCoeff();
  if (prod < 1.0 - kProductTie) {
    seq.strict_case = true;
    seq.q = choose_q(map.betas);
    double a = 0.0;
    for (int j = 0; j < k; ++j) a = std::max(a, k_radius(j) / seq.q(j));
    seq.a = a > 0.0 ? 1.01 * a : 1.0;
    seq.radii.col(0) = seq.q * seq.a;
  } else {
    seq.strict_case = false;
    double p = 1.0, r = 1.0;
    for (int j = 0; j < k; ++j) r = std::min(r, p *= map.betas(j));
    seq.r = r;
    // a~ is arbitrary beyond covering K; enlarge it until q a covers K too.
    seq.a_tilde = kmax > 0.0 ? 1.01 * kmax : 1.0;
    for (int attempt = 0;; ++attempt) {
      seq.a = seq.a_tilde / r;
      seq.majorant.emplace(map.h[0], map.betas(0), seq.a, majorant_nodes);
      Vector shrunk = map.betas;
      shrunk(0) = (*seq.majorant)(seq.a) / seq.a;
      seq.q = choose_q(shrunk);
      seq.radii.col(0) = seq.q * seq.a;
      double short_by = 0.0;
      for (int j = 0; j < k; ++j) short_by = std::max(short_by, k_radius(j) / seq.radii(j, 0));
      if (short_by < 1.0 || attempt == 50) break;
      seq.a_tilde *= 1.01 * short_by;
    }
    seq.notes.push_back("product_one_branch");
  }

  const SlopeCheck slopes = check_slopes(map, seq.radii.col(0), !seq.strict_case);
  if (!slopes.ok) invalid("box_sequence: slope certification failed: " + slopes.message);

  for (int m = 1; m < m_max; ++m) {
    for (int j = 0; j < k; ++j) {
      const double prev = seq.radii(upstream(j, k), m - 1);
      seq.radii(j, m) = (j == 0 && seq.majorant) ? (*seq.majorant)(prev) : map.betas(j) * prev;
    }
  }
  for (int j = 0; j < k; ++j) {
    if (!(seq.radii(j, 0) > k_radius(j))) {
      seq.notes.push_back("K_not_inside_I1_component_" + std::to_string(j + 1));
    }
  }
  return seq;
}

AttractorReport verify_strong_attractor(const CycleMap& map, const BoxSequence& boxes,
                                        const Vector& k_radius, int samples_per_face,
                                        double b3_tol) {
  const int k = map.k();
  const int m_max = boxes.m_max();
  if (boxes.radii.rows() != k || k_radius.size() != k) invalid("verify: dimension mismatch");
  AttractorReport rep;

  for (int j = 0; j < k; ++j) {
    if (!(k_radius(j) < boxes.radii(j, 0))) {
      std::ostringstream msg;
      msg << "K corner component " << (j + 1) << " = " << k_radius(j) << " not inside a_"
          << (j + 1) << "(1) = " << boxes.radii(j, 0);
      rep.b1 = {false, msg.str(), 1, j, k_radius(j)};
      break;
    }
  }
  if (rep.b1.passed) rep.b1.detail = "K inside int(I_1)";

  // H is separable, so H(I_m) is the product of the componentwise images.
  rep.min_margin = std::numeric_limits<double>::infinity();
  std::vector<std::string> tolerated;
  for (int m = 0; m + 1 < m_max && rep.b2.passed; ++m) {
    for (int j = 0; j < k; ++j) {
      const double r_in = boxes.radii(upstream(j, k), m);
      const double next = boxes.radii(j, m + 1);
      const bool mono =
          static_cast<std::size_t>(j) < map.monotone.size() && map.monotone[static_cast<std::size_t>(j)];
      const auto [img, arg] = image_bound(map.h[static_cast<std::size_t>(j)], mono, r_in,
                                          samples_per_face);
      const double margin = next - img;
      rep.min_margin = std::min(rep.min_margin, margin);
      if (margin < 0.0) {
        std::ostringstream msg;
        msg << "H(I_" << (m + 1) << ") not in I_" << (m + 2) << ": |h_" << (j + 1) << "(" << arg
            << ")| = " << img << " > a_" << (j + 1) << "(" << (m + 2) << ") = " << next;
        rep.b2 = {false, msg.str(), m + 1, j, arg};
        break;
      }
      const double cur = boxes.radii(j, m);
      const bool nested = next < cur || (next == 0.0 && cur == 0.0);
      if (!nested) {
        std::ostringstream msg;
        msg << "a_" << (j + 1) << "(" << (m + 2) << ") = " << next << " >= a_" << (j + 1) << "("
            << (m + 1) << ") = " << cur;
        if (m == 0) {
          tolerated.push_back(msg.str());
        } else {
          rep.b2 = {false, "I_" + std::to_string(m + 2) + " not in int(I_" +
                               std::to_string(m + 1) + "): " + msg.str(),
                    m + 1, j, std::nullopt};
          break;
        }
      }
    }
  }
  if (rep.b2.passed) {
    rep.b2.detail = "H(I_m) in I_{m+1} in int(I_m) for m < " + std::to_string(m_max);
    for (const auto& t : tolerated) rep.b2.detail += "; first-step nesting tolerated: " + t;
  }

  rep.final_radius = boxes.radii.col(m_max - 1).maxCoeff();
  bool decreasing = true;
  for (int m = 2; m < m_max && decreasing; ++m) {
    for (int j = 0; j < k; ++j) {
      if (boxes.radii(j, m) > boxes.radii(j, m - 1)) decreasing = false;
    }
  }
  std::ostringstream b3;
  b3 << "final radius " << rep.final_radius;
  if (!decreasing) {
    rep.b3.passed = false;
    b3 << "; radii not monotone after the first step";
  } else if (rep.final_radius < b3_tol) {
    b3 << " < " << b3_tol;
  } else {
    b3 << "; not yet below tolerance " << b3_tol;
  }
  rep.b3.detail = b3.str();
  return rep;
}

Matrix iterate_map(const CycleMap& map, const Vector& y0, int n) {
  if (n < 0) invalid("iterate_map: n must be >= 0");
  Matrix orbit(map.k(), n + 1);
  orbit.col(0) = y0;
  for (int i = 0; i < n; ++i) orbit.col(i + 1) = map.apply(orbit.col(i));
  return orbit;
}

CycleMap cascade_cycle_map(const CascadeSpec& spec, const Vector& xbar, double cone,
                           double margin) {
  validate(spec);
  if (xbar.size() != spec.k) invalid("cascade_cycle_map: steady state has wrong dimension");
  if (!(cone >= 0.0) || !(margin >= 0.0)) invalid("cascade_cycle_map: bad cone slope or margin");
  const int k = spec.k;
  const FeedbackFn f = clamp_extend(spec.feedback);
  const double xk = xbar(k - 1);
  const double fk = f(xk);
  const double mu1 = spec.mu(0);
  CycleMap map;
  map.betas = Vector(k);
  map.h.push_back([f, xk, fk, mu1](double y) { return (f(xk + y) - fk) / mu1; });
  map.betas(0) = cone / mu1 * (1.0 + margin);
  bool mono = true;
  if (const auto* t = std::get_if<TableFeedback>(&spec.feedback.variant())) {
    const bool up = std::is_sorted(t->ys.begin(), t->ys.end());
    const bool down = std::is_sorted(t->ys.rbegin(), t->ys.rend());
    mono = up || down;
  }
  map.monotone.push_back(mono);
  for (int j = 1; j < k; ++j) {
    const double s = spec.alpha(j - 1) / spec.mu(j);
    map.h.push_back([s](double y) { return s * y; });
    map.betas(j) = s;
    map.monotone.push_back(true);
  }
  return map;
}

CycleMap hes1_cycle_map(double mu, double b, double h, double margin) {
  const double cone = cone_slope(h, b, mu);
  const FeedbackFn f = clamp_extend(FeedbackFn::hill(mu, b, h));
  CycleMap map;
  map.h.push_back([f, mu](double v) { return (f(1.0 + v) - mu) / mu; });
  map.betas = Vector::Constant(1, cone / mu * (1.0 + margin));
  map.monotone = {true};
  return map;
}

double estimate_cone_slope(const FeedbackFn& f, double c, double lo, double hi, int samples) {
  if (!(hi > lo) || samples < 2) invalid("estimate_cone_slope: bad sampling range");
  const FeedbackFn g = clamp_extend(f);
  const double fc = g(c);
  double best = std::abs(g.derivative(c));
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
    if (x == c) continue;
    best = std::max(best, std::abs(g(x) - fc) / std::abs(x - c));
  }
  return best;
}

}  // namespace cascade
