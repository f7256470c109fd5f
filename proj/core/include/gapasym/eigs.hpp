#pragma once

#include "gapasym/common.hpp"

namespace gapasym {

struct HermitianEigs {
  VectorXd values;   // ascending
  MatrixXcd vectors;  // columns match values
};

HermitianEigs hermitian_eigs(const MatrixXcd& m);
VectorXd hermitian_eigenvalues(const MatrixXcd& m);

/// One eigenpair of a general complex matrix, located by shifted inverse
/// iteration from a seed vector. `isolation` estimates the distance to the
/// nearest other eigenvalue (from a small Rayleigh-Ritz block around the
/// shift); `second_overlap` is |<seed, ritz vector of that neighbor>|.
struct TrackedPair {
  cxd value{};
  VectorXcd vector;
  double residual = 0.0;      // ||M v - value v||_2 with ||v|| = 1
  double seed_overlap = 0.0;  // |<seed, vector>|
  double isolation = std::numeric_limits<double>::infinity();
  cxd second_value{};
  double second_overlap = 0.0;
};

struct TrackOptions {
  double tol = 1e-13;  // residual target relative to the matrix magnitude
  int max_factorizations = 5;
  int max_solves_per_factorization = 8;
  int ritz_block = 4;  // 0 disables the isolation estimate
};

TrackedPair track_eigenpair(const MatrixXcd& m, cxd shift, const VectorXcd& seed,
                            const TrackOptions& opts = {});

/// Dense fallback: all eigenpairs (unsorted as returned by the solver).
struct ComplexEigs {
  VectorXcd values;
  MatrixXcd vectors;
};
ComplexEigs complex_eigs(const MatrixXcd& m);

}  // namespace gapasym
