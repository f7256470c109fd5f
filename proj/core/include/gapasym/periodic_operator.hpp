#pragma once

#include "gapasym/common.hpp"
#include "gapasym/kvdoc.hpp"

#include <map>
#include <vector>

namespace gapasym {

/// Second-order periodic elliptic operator D*A(x)D + V(x) on the unit cell
/// [0,1]^d, described by finitely many Fourier coefficients of A and V with
/// respect to the basis e^{2*pi*i n.x}. Coefficient symmetry guarantees A
/// real symmetric and V real. Immutable after construction.
class PeriodicOperator {
 public:
  struct MetricCoeff {
    VectorXi n;
    MatrixXcd a;  // d x d
  };
  struct PotentialCoeff {
    VectorXi n;
    cxd v;
  };

  int dim() const { return dim_; }
  double ellipticity_floor() const { return ellipticity_floor_; }
  const std::vector<MetricCoeff>& metric_coeffs() const { return metric_; }
  const std::vector<PotentialCoeff>& potential_coeffs() const { return potential_; }

  const MatrixXcd* metric_at(const VectorXi& n) const;
  cxd potential_at(const VectorXi& n) const;

  /// Max ||n||_inf over stored coefficients (coupling bandwidth).
  int coefficient_reach() const { return reach_; }
  /// Mean metric A_0 (always present; identity for pure Schroedinger form).
  const MatrixXcd& mean_metric() const { return mean_metric_; }
  /// Mean potential V_0 (0 when absent).
  double mean_potential() const { return mean_potential_; }

  /// A(x), V(x) by Fourier summation at x (any real vector; 1-periodic).
  /// Imaginary residue above 1e-12 * scale reports corrupted coefficients.
  std::pair<MatrixXd, double> evaluate_coefficients(const VectorXd& x) const;

  /// Content hash over dimension, floor and all coefficients.
  std::string content_hash() const;

  // --- common model operators ---
  static PeriodicOperator free_laplacian(int dim);
  /// -d2/dx2 + 2 q cos(2 pi x) in d=1  (V_{+-1} = q).
  static PeriodicOperator mathieu_1d(double q);
  /// -Lap + 2 q (cos 2 pi x_1 + ... + cos 2 pi x_d).
  static PeriodicOperator separable_mathieu(int dim, double q);

  class Builder;

 private:
  friend class Builder;
  PeriodicOperator() = default;

  int dim_ = 0;
  double ellipticity_floor_ = 0.0;
  std::vector<MetricCoeff> metric_;        // sorted by n, complete under n -> -n
  std::vector<PotentialCoeff> potential_;  // sorted by n, complete under n -> -n
  int reach_ = 0;
  MatrixXcd mean_metric_;
  double mean_potential_ = 0.0;
};

/// Accumulates coefficients, then validates invariants (conjugate-pair
/// completeness, matrix symmetry, sampled ellipticity) at build time.
class PeriodicOperator::Builder {
 public:
  explicit Builder(int dim);

  /// Stores A_n. The conjugate partner A_{-n} = conj(A_n) is auto-filled if
  /// absent; if present it must match.
  Builder& metric(const VectorXi& n, const MatrixXcd& a);
  Builder& potential(const VectorXi& n, cxd v);
  Builder& ellipticity_floor(double theta);

  /// Validates all invariants; throws NumericalError on violation.
  PeriodicOperator build() const;
  /// Skips validation (for constructing deliberately broken operators in
  /// tests of the contrapositive checks).
  PeriodicOperator build_unchecked() const;

 private:
  PeriodicOperator assemble(bool validate) const;
  int dim_;
  double floor_ = -1.0;  // <0: derive from sampled minimum
  std::map<std::vector<int>, MatrixXcd> metric_;
  std::map<std::vector<int>, cxd> potential_;
};

/// File schema round-trip (keys: schema_version, dimension, ellipticity_floor,
/// [[metric]] {index, matrix}, [[potential]] {index, value}).
PeriodicOperator operator_from_kv(const KvTable& t);
KvTable operator_to_kv(const PeriodicOperator& op);
PeriodicOperator load_operator_file(const std::string& path);

}  // namespace gapasym
