#ifndef CASCADE_TYPES_HPP
#define CASCADE_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cascade {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an integration produces a non-finite state.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, const std::string& what)
      : std::runtime_error(what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Raised when a bracketed root search finds no sign change.
class BracketError : public std::runtime_error {
 public:
  BracketError(double f_lo, double f_hi, const std::string& what)
      : std::runtime_error(what), f_lo_(f_lo), f_hi_(f_hi) {}

  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }

 private:
  double f_lo_;
  double f_hi_;
};

}  // namespace cascade

#endif  // CASCADE_TYPES_HPP
