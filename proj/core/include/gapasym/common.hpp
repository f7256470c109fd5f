#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace gapasym {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Thrown when an operation's preconditions are violated or a numerical
/// stage fails in a way the caller is expected to handle (branch ambiguity,
/// Newton divergence, quadrature non-convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw NumericalError(msg);
}

/// Fractional part componentwise, in [0,1).
inline VectorXd fractional(const VectorXd& x) {
  VectorXd f(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double fi = x[i] - std::floor(x[i]);
    if (fi >= 1.0) fi = 0.0;  // guard against -1e-17 rounding up
    f[i] = fi;
  }
  return f;
}

/// Wrap an angle-like quantity into (-pi, pi].
inline double wrap_pi(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

}  // namespace gapasym
