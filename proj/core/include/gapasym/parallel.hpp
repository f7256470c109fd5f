#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace gapasym {

/// Global worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// body must only write to per-index slots so results are order-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic sum of f(i) over [0, n): accumulation happens in fixed-size
/// index-ordered blocks, then blocks are combined in index order, so the
/// result is independent of the thread count.
std::complex<double> parallel_block_sum(
    std::size_t n, const std::function<std::complex<double>(std::size_t)>& f,
    std::size_t block = 1024);

/// Same reduction tree, serial evaluation (for small n or nested contexts).
std::complex<double> block_sum(
    std::size_t n, const std::function<std::complex<double>(std::size_t)>& f,
    std::size_t block = 1024);

}  // namespace gapasym
