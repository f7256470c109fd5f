#include <benchmark/benchmark.h>

#include <Eigen/LU>

#include "gapasym/complex_dispersion.hpp"
#include "gapasym/eigs.hpp"
#include "gapasym/fiber_matrix.hpp"

using namespace gapasym;

namespace {

static void BM_AssembleFiber2D(benchmark::State& state) {
  const auto op = PeriodicOperator::separable_mathieu(2, 5.0);
  const FourierIndexSet basis(2, static_cast<int>(state.range(0)));
  VectorXcd k(2);
  k << cxd(0.3, 0.1), cxd(-0.7, 0.2);
  for (auto _ : state) {
    auto m = assemble_fiber(op, k, basis);
    benchmark::DoNotOptimize(m.entries.data());
  }
  state.SetComplexityN(basis.size());
}
BENCHMARK(BM_AssembleFiber2D)->Arg(4)->Arg(6)->Arg(8)->Complexity();

static void BM_HermitianSolve2D(benchmark::State& state) {
  const auto op = PeriodicOperator::separable_mathieu(2, 5.0);
  const FourierIndexSet basis(2, static_cast<int>(state.range(0)));
  VectorXd k(2);
  k << 0.3, -0.7;
  const MatrixXcd m = assemble_fiber(op, to_complex(k), basis).entries;
  for (auto _ : state) {
    auto evs = hermitian_eigenvalues(m);
    benchmark::DoNotOptimize(evs.data());
  }
  state.SetComplexityN(basis.size());
}
BENCHMARK(BM_HermitianSolve2D)->Arg(4)->Arg(6)->Arg(8)->Complexity();

static void BM_ResolventNode(benchmark::State& state) {
  // one Brillouin-zone quadrature node: assemble + LU + single solve
  const auto op = PeriodicOperator::separable_mathieu(2, 5.0);
  const FourierIndexSet basis(2, static_cast<int>(state.range(0)));
  const int n = basis.size();
  VectorXcd k(2);
  k << cxd(0.3, 0.05), cxd(-0.7, 0.02);
  const VectorXcd rhs = VectorXcd::Ones(n).normalized();
  for (auto _ : state) {
    MatrixXcd m = assemble_fiber(op, k, basis).entries;
    for (int i = 0; i < n; ++i) m(i, i) -= 9.9;
    Eigen::PartialPivLU<MatrixXcd> lu(m);
    VectorXcd u = lu.solve(rhs);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_ResolventNode)->Arg(4)->Arg(5)->Arg(6)->Arg(8)->Complexity();

static void BM_TrackedEigenpair(benchmark::State& state) {
  const auto op = PeriodicOperator::separable_mathieu(2, 5.0);
  BandEdge edge;
  edge.band_index = 1;
  edge.k0 = VectorXd::Constant(2, kPi);
  edge.orientation = -1;
  const FourierIndexSet basis(2, static_cast<int>(state.range(0)));
  const auto eig = hermitian_eigs(assemble_fiber(op, to_complex(edge.k0), basis).entries);
  edge.edge_energy = eig.values[0];
  VectorXcd kappa(2);
  kappa << cxd(kPi, 0.3), cxd(kPi, 0.25);
  const MatrixXcd m = assemble_fiber(op, kappa, basis).entries;
  for (auto _ : state) {
    auto pair = track_eigenpair(m, eig.values[0], eig.vectors.col(0));
    benchmark::DoNotOptimize(pair.value);
  }
  state.SetComplexityN(basis.size());
}
BENCHMARK(BM_TrackedEigenpair)->Arg(4)->Arg(6)->Arg(8)->Complexity();

}  // namespace

BENCHMARK_MAIN();
