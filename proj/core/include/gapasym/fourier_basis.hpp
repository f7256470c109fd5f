#pragma once

#include "gapasym/common.hpp"

#include <vector>

namespace gapasym {

/// All lattice indices m in Z^d with ||m||_inf <= cutoff, enumerated
/// lexicographically with the first component slowest. The enumeration is
/// deterministic; size() = (2*cutoff+1)^d.
class FourierIndexSet {
 public:
  FourierIndexSet(int dim, int cutoff);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  int size() const { return size_; }

  VectorXi index(int flat) const;
  /// Flat position of m, or -1 when ||m||_inf > cutoff.
  int flat(const VectorXi& m) const;
  bool contains(const VectorXi& m) const { return flat(m) >= 0; }

  const std::vector<VectorXi>& indices() const { return indices_; }

 private:
  int dim_;
  int cutoff_;
  int size_;
  std::vector<VectorXi> indices_;
};

}  // namespace gapasym
