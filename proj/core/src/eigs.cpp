#include "gapasym/eigs.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <random>

namespace gapasym {

HermitianEigs hermitian_eigs(const MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m);
  require(es.info() == Eigen::Success, "Hermitian eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

VectorXd hermitian_eigenvalues(const MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, "Hermitian eigensolver failed");
  return es.eigenvalues();
}

ComplexEigs complex_eigs(const MatrixXcd& m) {
  Eigen::ComplexEigenSolver<MatrixXcd> es(m, /*computeEigenvectors=*/true);
  require(es.info() == Eigen::Success, "complex eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

double matrix_scale(const MatrixXcd& m) {
  // cheap magnitude proxy; exact choice only affects the stopping threshold
  return std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
}

}  // namespace

TrackedPair track_eigenpair(const MatrixXcd& m, cxd shift, const VectorXcd& seed,
                            const TrackOptions& opts) {
  const int n = static_cast<int>(m.rows());
  require(n >= 1 && m.cols() == n, "track_eigenpair: matrix must be square");
  require(seed.size() == n, "track_eigenpair: seed has wrong size");

  const double scale = matrix_scale(m);
  TrackedPair out;

  if (n == 1) {
    out.value = m(0, 0);
    out.vector = VectorXcd::Ones(1);
    out.seed_overlap = 1.0;
    return out;
  }

  VectorXcd v = seed.normalized();
  cxd sigma = shift;
  double best_residual = std::numeric_limits<double>::infinity();

  for (int f = 0; f < opts.max_factorizations; ++f) {
    // keep the shift slightly off the eigenvalue so the factorization stays
    // regular; inverse iteration is insensitive to this offset
    cxd sigma_used = sigma + cxd(0.0, 1e-12 * scale);
    Eigen::PartialPivLU<MatrixXcd> lu(m - sigma_used * MatrixXcd::Identity(n, n));

    for (int it = 0; it < opts.max_solves_per_factorization; ++it) {
      VectorXcd w = lu.solve(v);
      const double norm = w.norm();
      if (!std::isfinite(norm) || norm == 0.0) break;
      v = w / norm;
      const cxd lambda = v.dot(m * v);  // Eigen dot conjugates the left factor
      const double residual = (m * v - lambda * v).norm();
      if (residual < best_residual) {
        best_residual = residual;
        out.value = lambda;
        out.vector = v;
      }
      if (residual <= opts.tol * scale) break;
    }
    if (best_residual <= opts.tol * scale) break;
    sigma = out.value;
    v = out.vector;
  }
  require(out.vector.size() == n, "inverse iteration failed to produce a vector");
  require(best_residual <= 1e-9 * scale,
          "inverse iteration stagnated (residual " + std::to_string(best_residual) + ")");
  out.residual = best_residual;
  out.seed_overlap = std::abs(seed.normalized().dot(out.vector));

  if (opts.ritz_block > 1) {
    // small Rayleigh-Ritz block around the converged value to estimate the
    // distance to the rest of the spectrum
    const int b = std::min(opts.ritz_block, n);
    cxd sigma_used = out.value + cxd(0.0, 1e-10 * scale);
    Eigen::PartialPivLU<MatrixXcd> lu(m - sigma_used * MatrixXcd::Identity(n, n));
    MatrixXcd block(n, b);
    block.col(0) = out.vector;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 1; c < b; ++c)
      for (int r = 0; r < n; ++r) block(r, c) = cxd(gauss(rng), gauss(rng));
    for (int pass = 0; pass < 2; ++pass) {
      block = lu.solve(block);
      Eigen::HouseholderQR<MatrixXcd> qr(block);
      block = qr.householderQ() * MatrixXcd::Identity(n, b);
    }
    const MatrixXcd t = block.adjoint() * (m * block);
    Eigen::ComplexEigenSolver<MatrixXcd> es(t, /*computeEigenvectors=*/true);
    if (es.info() == Eigen::Success) {
      int i_self = 0;
      double d_self = std::numeric_limits<double>::infinity();
      for (int i = 0; i < b; ++i) {
        const double d = std::abs(es.eigenvalues()[i] - out.value);
        if (d < d_self) {
          d_self = d;
          i_self = i;
        }
      }
      for (int i = 0; i < b; ++i) {
        if (i == i_self) continue;
        const double d = std::abs(es.eigenvalues()[i] - out.value);
        if (d < out.isolation) {
          out.isolation = d;
          out.second_value = es.eigenvalues()[i];
          const VectorXcd rv = (block * es.eigenvectors().col(i)).normalized();
          out.second_overlap = std::abs(seed.normalized().dot(rv));
        }
      }
    }
  }
  return out;
}

}  // namespace gapasym
