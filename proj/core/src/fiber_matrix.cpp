#include "gapasym/fiber_matrix.hpp"

#include <unordered_map>

namespace gapasym {

VectorXcd to_complex(const VectorXd& k) {
  VectorXcd z(k.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) z[i] = cxd(k[i], 0.0);
  return z;
}

VectorXcd complex_quasimomentum(const VectorXd& re, const VectorXd& im) {
  require(re.size() == im.size(), "quasimomentum parts must have equal dimension");
  VectorXcd z(re.size());
  for (Eigen::Index i = 0; i < re.size(); ++i) z[i] = cxd(re[i], im[i]);
  return z;
}

namespace {

std::int64_t pack_index(const VectorXi& m) {
  std::int64_t key = 0;
  for (int j = 0; j < m.size(); ++j) key = key * 2048 + (m[j] + 1024);
  return key;
}

}  // namespace

MatrixXcd assemble_fiber_matrix(const PeriodicOperator& op, const VectorXcd& k,
                                std::span<const VectorXi> indices) {
  require(k.size() == op.dim(), "quasimomentum dimension does not match operator");
  require(!indices.empty(), "assembly requires a nonempty basis");
  const int d = op.dim();
  const int n = static_cast<int>(indices.size());

  std::unordered_map<std::int64_t, int> pos;
  pos.reserve(2 * n);
  for (int i = 0; i < n; ++i) pos.emplace(pack_index(indices[i]), i);

  // momentum factors 2*pi*m + k per basis vector
  std::vector<VectorXcd> mom(n);
  for (int i = 0; i < n; ++i) {
    VectorXcd p(d);
    for (int j = 0; j < d; ++j) p[j] = kTwoPi * indices[i][j] + k[j];
    mom[i] = p;
  }

  MatrixXcd m = MatrixXcd::Zero(n, n);
  for (const auto& mc : op.metric_coeffs()) {
    for (int col = 0; col < n; ++col) {
      VectorXi row_idx = indices[col] + mc.n;
      auto it = pos.find(pack_index(row_idx));
      if (it == pos.end()) continue;
      const int row = it->second;
      // (2 pi m + k)^T A_n (2 pi m' + k), row = m, col = m'
      m(row, col) += (mom[row].transpose() * mc.a * mom[col]).value();
    }
  }
  for (const auto& pc : op.potential_coeffs()) {
    for (int col = 0; col < n; ++col) {
      VectorXi row_idx = indices[col] + pc.n;
      auto it = pos.find(pack_index(row_idx));
      if (it == pos.end()) continue;
      m(it->second, col) += pc.v;
    }
  }
  return m;
}

FiberMatrix assemble_fiber(const PeriodicOperator& op, const VectorXcd& k,
                           const FourierIndexSet& basis) {
  require(basis.dim() == op.dim(), "basis dimension does not match operator");
  return FiberMatrix{k, basis,
                     assemble_fiber_matrix(op, k, std::span<const VectorXi>(basis.indices()))};
}

double hermiticity_residual(const PeriodicOperator& op, const VectorXcd& k,
                            const FourierIndexSet& basis) {
  const MatrixXcd mk = assemble_fiber(op, k, basis).entries;
  const MatrixXcd mkc = assemble_fiber(op, k.conjugate(), basis).entries;
  return (mk.adjoint() - mkc).cwiseAbs().maxCoeff();
}

}  // namespace gapasym
