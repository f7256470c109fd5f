#pragma once

// Shared test-side oracles. These deliberately avoid the library's assembly
// and continuation code paths: the 1D fiber matrices are built here from
// scratch and solved densely, so they can vouch for the library results.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <vector>

#include "gapasym/common.hpp"

namespace testo {

using gapasym::cxd;
using gapasym::kPi;
using gapasym::kTwoPi;

/// Dense 1D Mathieu fiber matrix for -u'' + 2 q cos(2 pi x) u at (possibly
/// complex) quasimomentum k, modes m = -n..n.
inline Eigen::MatrixXcd mathieu_fiber_1d(double q, cxd k, int n) {
  const int size = 2 * n + 1;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    const double mode = i - n;
    const cxd p = kTwoPi * mode + k;
    m(i, i) = p * p;
    if (i + 1 < size) {
      m(i, i + 1) = q;
      m(i + 1, i) = q;
    }
  }
  return m;
}

/// Sorted real eigenvalues at real quasimomentum.
inline Eigen::VectorXd mathieu_bands_1d(double q, double k, int n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      mathieu_fiber_1d(q, cxd(k, 0.0), n), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Band-1 eigenvalue continued to k = pi + i b, branch selected by maximal
/// eigenvector overlap along a short continuation from b = 0.
inline cxd mathieu_band1_continued(double q, double b, int n, int steps = 24) {
  const int size = 2 * n + 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es0(
      mathieu_fiber_1d(q, cxd(kPi, 0.0), n));
  Eigen::VectorXcd vec = es0.eigenvectors().col(0);
  cxd value = es0.eigenvalues()[0];
  for (int s = 1; s <= steps; ++s) {
    const double bs = b * s / steps;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(
        mathieu_fiber_1d(q, cxd(kPi, bs), n), true);
    int best = 0;
    double best_overlap = -1.0;
    for (int i = 0; i < size; ++i) {
      const double ov = std::abs(vec.dot(es.eigenvectors().col(i)));
      if (ov > best_overlap) {
        best_overlap = ov;
        best = i;
      }
    }
    vec = es.eigenvectors().col(best);
    value = es.eigenvalues()[best];
  }
  return value;
}

/// Band-1 eigenpair continued to k = pi + i b (unit-norm vector).
inline std::pair<cxd, Eigen::VectorXcd> mathieu_band1_pair(double q, double b, int n,
                                                           int steps = 24) {
  const int size = 2 * n + 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es0(
      mathieu_fiber_1d(q, cxd(kPi, 0.0), n));
  Eigen::VectorXcd vec = es0.eigenvectors().col(0);
  cxd value = es0.eigenvalues()[0];
  for (int s = 1; s <= steps; ++s) {
    const double bs = b * s / steps;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(
        mathieu_fiber_1d(q, cxd(kPi, bs), n), true);
    int best = 0;
    double best_overlap = -1.0;
    for (int i = 0; i < size; ++i) {
      const double ov = std::abs(vec.dot(es.eigenvectors().col(i)));
      if (ov > best_overlap) {
        best_overlap = ov;
        best = i;
      }
    }
    vec = es.eigenvectors().col(best).normalized();
    value = es.eigenvalues()[best];
  }
  return {value, vec};
}

/// Central second difference with one Richardson halving.
template <typename F>
double second_derivative(F&& f, double x, double h = 1e-3) {
  auto d2 = [&](double step) {
    return (f(x + step) + f(x - step) - 2.0 * f(x)) / (step * step);
  };
  return (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
}

/// First-order perturbation derivative of the 1d band: d mu_j / dk =
/// sum_m |v_m|^2 2 (2 pi m + k). Noise-free compared to value differences.
inline double mathieu_band_derivative_1d(double q, double k, int j, int n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      mathieu_fiber_1d(q, cxd(k, 0.0), n));
  const Eigen::VectorXcd v = es.eigenvectors().col(j);
  double g = 0.0;
  for (int i = 0; i < 2 * n + 1; ++i)
    g += std::norm(v[i]) * 2.0 * (kTwoPi * (i - n) + k);
  return g;
}

/// Second derivative of band 1 at k via Richardson-extrapolated central
/// differences of the perturbative first derivative.
inline double mathieu_band1_second_derivative(double q, double k, int n,
                                              double h = 1e-3) {
  auto d2 = [&](double step) {
    return (mathieu_band_derivative_1d(q, k + step, 0, n) -
            mathieu_band_derivative_1d(q, k - step, 0, n)) /
           (2.0 * step);
  };
  return (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
}

}  // namespace testo
