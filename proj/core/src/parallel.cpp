#include "gapasym/parallel.hpp"

#include <atomic>
#include <thread>

namespace gapasym {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
  int n = g_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  const int nt = thread_count();
  if (nt <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(1, n / (4 * nt));
  auto worker = [&] {
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) body(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (int t = 0; t + 1 < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

std::complex<double> block_sum(
    std::size_t n, const std::function<std::complex<double>(std::size_t)>& f,
    std::size_t block) {
  std::complex<double> total{0.0, 0.0};
  for (std::size_t b = 0; b < n; b += block) {
    std::complex<double> s{0.0, 0.0};
    std::size_t end = std::min(n, b + block);
    for (std::size_t i = b; i < end; ++i) s += f(i);
    total += s;
  }
  return total;
}

std::complex<double> parallel_block_sum(
    std::size_t n, const std::function<std::complex<double>(std::size_t)>& f,
    std::size_t block) {
  if (n == 0) return {0.0, 0.0};
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<std::complex<double>> partial(nblocks, {0.0, 0.0});
  parallel_for(nblocks, [&](std::size_t b) {
    std::complex<double> s{0.0, 0.0};
    const std::size_t begin = b * block;
    const std::size_t end = std::min(n, begin + block);
    for (std::size_t i = begin; i < end; ++i) s += f(i);
    partial[b] = s;
  });
  // blocks combined in index order: result independent of thread count
  std::complex<double> total{0.0, 0.0};
  for (const auto& s : partial) total += s;
  return total;
}

}  // namespace gapasym
