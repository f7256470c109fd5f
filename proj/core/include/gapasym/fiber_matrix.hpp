#pragma once

#include "gapasym/common.hpp"
#include "gapasym/fourier_basis.hpp"
#include "gapasym/periodic_operator.hpp"

#include <span>

namespace gapasym {

/// Truncated Galerkin matrix of the fiber operator L(k) in the plane-wave
/// basis: M(k)_{m,m'} = sum_{p,q} (2 pi m_p + k_p) A^{pq}_{m-m'}
/// (2 pi m'_q + k_q) + V_{m-m'}. Hermitian for real k; M(conj k) = M(k)^H.
struct FiberMatrix {
  VectorXcd k;
  FourierIndexSet basis;
  MatrixXcd entries;
};

FiberMatrix assemble_fiber(const PeriodicOperator& op, const VectorXcd& k,
                           const FourierIndexSet& basis);

/// Assembly over an arbitrary (deterministically ordered) index list; the
/// cube overload forwards here. Used directly by index-shift covariance
/// checks.
MatrixXcd assemble_fiber_matrix(const PeriodicOperator& op, const VectorXcd& k,
                                std::span<const VectorXi> indices);

/// Max-norm of M(k)^H - M(conj k); zero up to rounding for a valid operator.
double hermiticity_residual(const PeriodicOperator& op, const VectorXcd& k,
                            const FourierIndexSet& basis);

/// Real quasimomentum convenience.
VectorXcd to_complex(const VectorXd& k);
VectorXcd complex_quasimomentum(const VectorXd& re, const VectorXd& im);

}  // namespace gapasym
