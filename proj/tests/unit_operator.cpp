#include <doctest.h>

#include <random>

#include "gapasym/eigs.hpp"
#include "gapasym/fiber_matrix.hpp"
#include "test_helpers.hpp"

using namespace gapasym;

namespace {

VectorXi iv(std::initializer_list<int> vals) {
  VectorXi v(static_cast<int>(vals.size()));
  int i = 0;
  for (int x : vals) v[i++] = x;
  return v;
}

VectorXcd ck(std::initializer_list<cxd> vals) {
  VectorXcd v(static_cast<int>(vals.size()));
  int i = 0;
  for (cxd x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("free operator fiber is diagonal |2 pi m + k|^2") {
  const auto op = PeriodicOperator::free_laplacian(1);
  const FourierIndexSet basis(1, 1);
  const auto fm = assemble_fiber(op, ck({0.0}), basis);
  // enumeration m = -1, 0, 1
  CHECK(fm.entries(0, 0).real() == doctest::Approx(4 * kPi * kPi).epsilon(1e-14));
  CHECK(fm.entries(1, 1).real() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fm.entries(2, 2).real() == doctest::Approx(4 * kPi * kPi).epsilon(1e-14));
  CHECK(fm.entries.cwiseAbs().sum() ==
        doctest::Approx(8 * kPi * kPi).epsilon(1e-14));  // off-diagonals vanish
}

TEST_CASE("1d potential with V_{+-1} = 1 gives the tridiagonal fiber at k = pi") {
  const auto op = PeriodicOperator::mathieu_1d(1.0);
  const FourierIndexSet basis(1, 1);
  const auto fm = assemble_fiber(op, ck({kPi}), basis);
  CHECK(fm.entries(0, 0).real() == doctest::Approx(kPi * kPi).epsilon(1e-14));
  CHECK(fm.entries(1, 1).real() == doctest::Approx(kPi * kPi).epsilon(1e-14));
  CHECK(fm.entries(2, 2).real() == doctest::Approx(9 * kPi * kPi).epsilon(1e-14));
  CHECK(fm.entries(0, 1) == cxd(1.0, 0.0));
  CHECK(fm.entries(1, 0) == cxd(1.0, 0.0));
  CHECK(fm.entries(1, 2) == cxd(1.0, 0.0));
  CHECK(fm.entries(0, 2) == cxd(0.0, 0.0));
}

TEST_CASE("free d=2 fiber at k = (pi, 0) has smallest diagonal pi^2") {
  const auto op = PeriodicOperator::free_laplacian(2);
  const FourierIndexSet basis(2, 2);
  const auto fm = assemble_fiber(op, ck({kPi, 0.0}), basis);
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < basis.size(); ++i) smallest = std::min(smallest, fm.entries(i, i).real());
  CHECK(smallest == doctest::Approx(kPi * kPi).epsilon(1e-14));
}

TEST_CASE("evaluate_coefficients sums the stored Fourier data") {
  const auto op = PeriodicOperator::mathieu_1d(1.0);
  VectorXd x(1);
  x << 0.0;
  CHECK(op.evaluate_coefficients(x).second == doctest::Approx(2.0).epsilon(1e-14));
  x << 0.25;
  CHECK(op.evaluate_coefficients(x).second == doctest::Approx(0.0).epsilon(1e-14));
  const auto free2 = PeriodicOperator::free_laplacian(2);
  VectorXd x2(2);
  x2 << 0.3, 0.9;
  const auto [a, v] = free2.evaluate_coefficients(x2);
  CHECK((a - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(v == 0.0);
}

TEST_CASE("hermiticity residual vanishes for valid operators") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(-kPi, kPi), im(-1.0, 1.0);
  const auto free2 = PeriodicOperator::free_laplacian(2);
  const auto mathieu = PeriodicOperator::mathieu_1d(0.5);
  const FourierIndexSet b2(2, 3), b1(1, 6);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    worst = std::max(worst, hermiticity_residual(
                                free2, ck({cxd(re(rng), im(rng)), cxd(re(rng), im(rng))}), b2));
    worst = std::max(worst, hermiticity_residual(mathieu, ck({cxd(re(rng), im(rng))}), b1));
  }
  CHECK(worst <= 1e-13);
  CHECK(hermiticity_residual(mathieu, ck({cxd(0.3, 0.2)}), b1) <= 1e-13);
}

TEST_CASE("corrupted metric symmetry is detected by the residual") {
  MatrixXcd bad(2, 2);
  bad << cxd(0.2, 0.0), cxd(0.1, 0.05), cxd(0.0, 0.0), cxd(0.2, 0.0);
  PeriodicOperator::Builder b(2);
  b.metric(iv({0, 0}), MatrixXcd::Identity(2, 2));
  b.metric(iv({1, 0}), bad);
  const auto op = b.build_unchecked();
  const FourierIndexSet basis(2, 2);
  CHECK(hermiticity_residual(op, ck({cxd(0.4, 0.1), cxd(-0.3, 0.2)}), basis) > 1e-8);
  // and the validating builder rejects it outright
  PeriodicOperator::Builder strict(2);
  strict.metric(iv({0, 0}), MatrixXcd::Identity(2, 2));
  strict.metric(iv({1, 0}), bad);
  CHECK_THROWS(strict.build());
}

TEST_CASE("non-elliptic metric is rejected") {
  PeriodicOperator::Builder b(1);
  b.metric(iv({0}), MatrixXcd::Identity(1, 1));
  // A(x) = 1 + 2.4 cos(2 pi x) dips negative
  b.metric(iv({1}), MatrixXcd::Constant(1, 1, cxd(1.2, 0.0)));
  CHECK_THROWS(b.build());
}

TEST_CASE("real-k eigenvalues are real and move at most by the perturbation norm") {
  const auto op = PeriodicOperator::separable_mathieu(2, 2.0);
  const FourierIndexSet basis(2, 3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-kPi, kPi);
  for (int t = 0; t < 5; ++t) {
    VectorXd k(2);
    k << uni(rng), uni(rng);
    VectorXd dk(2);
    dk << 1e-4 * uni(rng) / kPi, 1e-4 * uni(rng) / kPi;
    const MatrixXcd m0 = assemble_fiber(op, to_complex(k), basis).entries;
    const MatrixXcd m1 = assemble_fiber(op, to_complex(k + dk), basis).entries;
    CHECK((m0 - m0.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    const VectorXd e0 = hermitian_eigenvalues(m0);
    const VectorXd e1 = hermitian_eigenvalues(m1);
    const double bound = (m1 - m0).norm();  // Weyl via the Frobenius bound
    CHECK((e1 - e0).cwiseAbs().maxCoeff() <= bound + 1e-12);
  }
}

TEST_CASE("Galerkin eigenvalues decrease with the cutoff (Rayleigh-Ritz)") {
  for (const auto& op :
       {PeriodicOperator::free_laplacian(1), PeriodicOperator::mathieu_1d(1.5)}) {
    for (double k : {0.0, 1.1, kPi}) {
      VectorXd prev;
      for (int n = 2; n <= 6; ++n) {
        const FourierIndexSet basis(1, n);
        const VectorXd evs =
            hermitian_eigenvalues(assemble_fiber(op, ck({k}), basis).entries);
        if (prev.size()) {
          for (int j = 0; j < 4; ++j) CHECK(prev[j] >= evs[j] - 1e-12);
        }
        prev = evs.head(4);
      }
    }
  }
}

TEST_CASE("index-shift covariance: shifted basis compensates a dual-lattice shift") {
  const auto op = PeriodicOperator::separable_mathieu(2, 1.0);
  const FourierIndexSet basis(2, 2);
  VectorXi shift = iv({1, -2});
  std::vector<VectorXi> shifted;  // k -> k + 2 pi n pairs with m -> m - n
  for (const auto& m : basis.indices()) shifted.push_back(m - shift);
  VectorXd k(2);
  k << 0.7, -1.3;
  const VectorXcd kshift =
      to_complex(k) + kTwoPi * shift.cast<double>().cast<cxd>();
  const MatrixXcd a = assemble_fiber(op, to_complex(k), basis).entries;
  const MatrixXcd b =
      assemble_fiber_matrix(op, kshift, std::span<const VectorXi>(shifted));
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
  const VectorXd ea = hermitian_eigenvalues(a);
  const VectorXd eb = hermitian_eigenvalues(b);
  CHECK((ea - eb).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("operator file schema round-trips") {
  PeriodicOperator::Builder b(2);
  MatrixXcd a01(2, 2);
  a01 << cxd(0.05, 0.01), cxd(0.02, 0.0), cxd(0.02, 0.0), cxd(0.05, -0.01);
  b.metric(iv({0, 0}), MatrixXcd::Identity(2, 2) * 1.5);
  b.metric(iv({0, 1}), a01);
  b.potential(iv({1, 0}), cxd(2.0, 0.5));
  const auto op = b.ellipticity_floor(0.8).build();

  const std::string text = serialize_kv(operator_to_kv(op));
  const auto back = operator_from_kv(parse_kv(text));
  CHECK(back.content_hash() == op.content_hash());
  CHECK(back.dim() == 2);
  VectorXd x(2);
  x << 0.37, 0.81;
  CHECK(back.evaluate_coefficients(x).second ==
        doctest::Approx(op.evaluate_coefficients(x).second).epsilon(1e-14));
}

TEST_CASE("fourier index set enumerates the cube deterministically") {
  const FourierIndexSet basis(2, 1);
  CHECK(basis.size() == 9);
  CHECK(basis.index(0) == iv({-1, -1}));
  CHECK(basis.index(8) == iv({1, 1}));
  for (int i = 0; i < basis.size(); ++i) CHECK(basis.flat(basis.index(i)) == i);
  CHECK(basis.flat(iv({2, 0})) == -1);
}
