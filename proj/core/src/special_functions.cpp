#include "gapasym/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace gapasym {

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;
}

double bessel_i0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double bessel_k0(double x) {
  if (!(x > 0.0)) throw std::domain_error("bessel_k0: argument must be positive");
  if (x < 0.5) {
    // K0 = -(log(x/2)+gamma) I0(x) + sum_{k>=1} (x^2/4)^k/(k!)^2 H_k
    const double q = 0.25 * x * x;
    double term = 1.0;
    double hk = 0.0;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      hk += 1.0 / k;
      const double add = term * hk;
      sum += add;
      if (add < 1e-18 * (1.0 + sum)) break;
    }
    return -(std::log(0.5 * x) + kEulerGamma) * bessel_i0_series(x) + sum;
  }
  // K0(x) = int_0^inf exp(-x cosh t) dt. The integrand is even in t, so the
  // half-line trapezoid rule converges geometrically; truncate where the
  // integrand is below 1e-18 relative to e^{-x}.
  const double target = std::log(1e18);
  const double upper = std::acosh(1.0 + target / x);
  const int n = static_cast<int>(std::ceil(upper / 0.03125));
  const double h = upper / n;
  double sum = 0.5 * std::exp(-x);  // t = 0 endpoint, half weight
  for (int i = 1; i <= n; ++i) {
    sum += std::exp(-x * std::cosh(i * h));
  }
  return h * sum;
}

}  // namespace gapasym
