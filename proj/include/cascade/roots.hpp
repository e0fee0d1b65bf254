#ifndef CASCADE_ROOTS_HPP
#define CASCADE_ROOTS_HPP

#include <cmath>
#include <sstream>

#include "cascade/types.hpp"

namespace cascade {

/// Bisection on [lo, hi] driven by the sign of `fn`.
///
/// `sign_lo` is the known sign of fn at `lo` (+1 or -1); the endpoint values
/// are never re-evaluated, so callers with analytically known endpoint signs
/// are not at the mercy of cancellation there. Iterates until the midpoint
/// collides with an endpoint or the bracket is narrower than `xtol`.
template <typename Scalar, typename Fn>
Scalar bisect_signed(Fn&& fn, Scalar lo, Scalar hi, int sign_lo,
                     Scalar xtol = Scalar(0)) {
  for (int it = 0; it < 2200; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (mid <= lo || mid >= hi || (hi - lo) <= xtol) return mid;
    const Scalar fm = fn(mid);
    if (fm == Scalar(0)) return mid;
    if ((fm > Scalar(0)) == (sign_lo > 0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / Scalar(2);
}

/// Bisection that evaluates the endpoints and requires a sign change.
template <typename Scalar, typename Fn>
Scalar bisect(Fn&& fn, Scalar lo, Scalar hi, Scalar xtol = Scalar(0)) {
  const Scalar f_lo = fn(lo);
  const Scalar f_hi = fn(hi);
  if (f_lo == Scalar(0)) return lo;
  if (f_hi == Scalar(0)) return hi;
  if ((f_lo > Scalar(0)) == (f_hi > Scalar(0)) || std::isnan(f_lo) ||
      std::isnan(f_hi)) {
    std::ostringstream msg;
    msg << "no sign change on [" << lo << ", " << hi << "]: f(lo) = " << f_lo
        << ", f(hi) = " << f_hi;
    throw BracketError(double(f_lo), double(f_hi), msg.str());
  }
  return bisect_signed(fn, lo, hi, f_lo > Scalar(0) ? 1 : -1, xtol);
}

}  // namespace cascade

#endif  // CASCADE_ROOTS_HPP
