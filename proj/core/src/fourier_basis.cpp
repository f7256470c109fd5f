#include "gapasym/fourier_basis.hpp"

namespace gapasym {

FourierIndexSet::FourierIndexSet(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
  require(dim >= 1 && dim <= 3, "FourierIndexSet: dimension must be 1, 2 or 3");
  require(cutoff >= 0, "FourierIndexSet: cutoff must be nonnegative");
  const int w = 2 * cutoff + 1;
  size_ = 1;
  for (int j = 0; j < dim; ++j) size_ *= w;
  indices_.reserve(size_);
  VectorXi m = VectorXi::Constant(dim, -cutoff);
  for (int i = 0; i < size_; ++i) {
    indices_.push_back(m);
    // odometer increment, last component fastest
    for (int j = dim - 1; j >= 0; --j) {
      if (m[j] < cutoff) {
        ++m[j];
        break;
      }
      m[j] = -cutoff;
    }
  }
}

VectorXi FourierIndexSet::index(int flat) const { return indices_.at(flat); }

int FourierIndexSet::flat(const VectorXi& m) const {
  const int w = 2 * cutoff_ + 1;
  int f = 0;
  for (int j = 0; j < dim_; ++j) {
    const int c = m[j] + cutoff_;
    if (c < 0 || c >= w) return -1;
    f = f * w + c;
  }
  return f;
}

}  // namespace gapasym
