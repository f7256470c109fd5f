#include <doctest.h>

#include <algorithm>

#include "gapasym/band_structure.hpp"
#include "test_helpers.hpp"

using namespace gapasym;

namespace {

BandGrid free_bands_2d(int res = 16, int cutoff = 2) {
  return compute_bands(PeriodicOperator::free_laplacian(2), res, 6, cutoff);
}

}  // namespace

TEST_CASE("free 1d band 1 is k^2 on the grid") {
  const auto op = PeriodicOperator::free_laplacian(1);
  const auto bands = compute_bands(op, 16, 3, 2);
  for (int i = 0; i < bands.node_count(); ++i) {
    const double k = bands.nodes[i][0];
    CHECK(std::abs(bands.values(i, 0) - k * k) <= 1e-12);
  }
}

TEST_CASE("free 2d: lambda_1(pi, pi) = 2 pi^2 and no finite gap") {
  const auto bands = free_bands_2d();
  // resolution 16 includes (-pi, -pi), the same fiber as (pi, pi)
  int corner = -1;
  for (int i = 0; i < bands.node_count(); ++i)
    if (bands.nodes[i][0] == -kPi && bands.nodes[i][1] == -kPi) corner = i;
  REQUIRE(corner >= 0);
  CHECK(bands.values(corner, 0) == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
  CHECK(find_gaps(bands).empty());
}

TEST_CASE("mathieu 1d q=0.5: first gap matches the dense solve at k = pi") {
  const double q = 0.5;
  const auto op = PeriodicOperator::mathieu_1d(q);
  const auto bands = compute_bands(op, 32, 4, 16);
  const auto gaps = find_gaps(bands);
  REQUIRE(!gaps.empty());
  CHECK(gaps[0].below_band == 1);
  // independent dense 1d oracle at the zone edge, modes up to 16
  const Eigen::VectorXd edge = testo::mathieu_bands_1d(q, kPi, 16);
  CHECK(gaps[0].lower == doctest::Approx(edge[0]).epsilon(1e-10));
  CHECK(gaps[0].upper == doctest::Approx(edge[1]).epsilon(1e-10));
  const double width = gaps[0].width();
  CHECK(std::abs(width - 2 * q) <= 0.02 * 2 * q);  // first-order estimate 2q
}

TEST_CASE("separable 2d q=5: gap endpoints are sums of 1d extrema") {
  const double q = 5.0;
  const auto op = PeriodicOperator::separable_mathieu(2, q);
  const auto bands = compute_bands(op, 16, 4, 6);
  const auto gaps = find_gaps(bands);
  REQUIRE(!gaps.empty());
  CHECK(gaps[0].below_band == 1);
  const Eigen::VectorXd mu_pi = testo::mathieu_bands_1d(q, kPi, 20);
  const Eigen::VectorXd mu_0 = testo::mathieu_bands_1d(q, 0.0, 20);
  const double band1_top = 2.0 * mu_pi[0];         // max mu1 at both axes
  const double band2_bottom = mu_0[0] + mu_pi[1];  // min mu1 + min mu2
  CHECK(gaps[0].lower == doctest::Approx(band1_top).epsilon(1e-8));
  CHECK(gaps[0].upper == doctest::Approx(band2_bottom).epsilon(1e-8));
}

TEST_CASE("evenness on the grid") {
  const auto op = PeriodicOperator::separable_mathieu(2, 5.0);
  const auto bands = compute_bands(op, 16, 6, 6);
  CHECK(evenness_defect(bands) <= 1e-10);
}

TEST_CASE("free 2d bottom edge: k0 = 0 and H = 2I") {
  const auto bands = free_bands_2d();
  const auto op = PeriodicOperator::free_laplacian(2);
  const auto edge = locate_edge(op, bands, bottom_gap(bands), GapSide::Upper, 2);
  CHECK(edge.band_index == 1);
  CHECK(edge.orientation == +1);
  CHECK(edge.k0.norm() <= 1e-9);
  CHECK(std::abs(edge.edge_energy) <= 1e-12);
  CHECK((edge.hessian - 2.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);
  // idempotency proxy: one Newton step from k0 moves less than 1e-10
  const FourierIndexSet basis(2, 2);
  const VectorXd g = band_gradient(op, edge.k0, edge.band_index, basis);
  CHECK((edge.hessian.ldlt().solve(g)).norm() <= 1e-10);
}

TEST_CASE("separable 2d q=5 lower gap edge: k0 = (pi, pi), diagonal Hessian") {
  const double q = 5.0;
  const auto op = PeriodicOperator::separable_mathieu(2, q);
  const auto bands = compute_bands(op, 16, 4, 6);
  const auto gaps = find_gaps(bands);
  REQUIRE(!gaps.empty());
  auto edge = locate_edge(op, bands, gaps[0], GapSide::Lower, 6);
  CHECK(edge.band_index == 1);
  CHECK(edge.orientation == -1);
  CHECK(std::abs(edge.k0[0] - kPi) <= 1e-8);
  CHECK(std::abs(edge.k0[1] - kPi) <= 1e-8);

  // 1d finite-difference oracle for the second derivative of band 1 at pi
  const double h1 = -testo::mathieu_band1_second_derivative(q, kPi, 20);
  CHECK(std::abs(edge.hessian(0, 0) - h1) <= 1e-7);
  CHECK(std::abs(edge.hessian(1, 1) - h1) <= 1e-7);
  CHECK(std::abs(edge.hessian(0, 1)) <= 1e-7);
  CHECK(std::abs(edge.edge_energy - 2.0 * testo::mathieu_bands_1d(q, kPi, 20)[0]) <=
        1e-7);

  // Hessian consistency across independent routes (the perturbative one is
  // the raw band Hessian, negative definite at a band maximum)
  const FourierIndexSet basis(2, 6);
  const MatrixXd hp = band_hessian_perturbative(op, edge.k0, 1, basis);
  CHECK((edge.hessian + hp).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((edge.hessian - edge.hessian.transpose()).cwiseAbs().maxCoeff() <=
        1e-8 * edge.hessian.norm());

  const auto rep = check_assumptions(op, edge, bands);
  CHECK(rep.overall);
  CHECK(edge.gap_width == doctest::Approx(gaps[0].width()));
}

TEST_CASE("finite-difference Hessian agrees with a local quadratic fit") {
  const auto op = PeriodicOperator::mathieu_1d(0.5);
  const FourierIndexSet basis(1, 12);
  VectorXd k0(1);
  k0 << kPi;
  const MatrixXd h = band_hessian(op, k0, 1, basis, 1e-3);
  // even fit lambda_1(k0 + x) - lambda_1(k0) = A x^2 + B x^4 over a stencil
  // wide enough that eigensolver noise is negligible against the signal
  auto mu1 = [&](double k) { return testo::mathieu_bands_1d(0.5, k, 12)[0]; };
  const double dx = 1.5e-2;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(2);
  for (int i = 1; i <= 5; ++i) {
    const double x = i * dx;
    const double y = 0.5 * (mu1(kPi + x) + mu1(kPi - x)) - mu1(kPi);
    const Eigen::Vector2d row(x * x, x * x * x * x);
    ata += row * row.transpose();
    atb += row * y;
  }
  const Eigen::Vector2d coef = ata.ldlt().solve(atb);
  const double fit = 2.0 * coef[0];
  CHECK(std::abs(h(0, 0) - fit) <= 1e-6 * std::abs(fit));
}

TEST_CASE("assumption checks pass at the free bottom and fail off-symmetry") {
  const auto op = PeriodicOperator::free_laplacian(2);
  const auto bands = free_bands_2d();
  auto edge = locate_edge(op, bands, bottom_gap(bands), GapSide::Upper, 2);
  const auto rep = check_assumptions(op, edge, bands);
  CHECK(rep.a1.pass);
  CHECK(rep.a2.pass);
  CHECK(rep.a3.pass);
  CHECK(rep.a4.pass);
  CHECK(rep.a5.pass);
  CHECK(rep.overall);
  CHECK(rep.a2.margin == doctest::Approx(kPi * kPi).epsilon(1e-10));

  // a synthetic edge with k0 off the symmetry set must fail A5 and overall
  BandEdge off = edge;
  off.k0[0] = 1.1;
  const auto rep2 = check_assumptions(op, off, bands);
  CHECK(!rep2.a5.pass);
  CHECK(!rep2.overall);
}

TEST_CASE("auto cutoff converges quickly for smooth coefficients") {
  CHECK(auto_cutoff(PeriodicOperator::free_laplacian(2), 4) <= 3);
  const int n = auto_cutoff(PeriodicOperator::separable_mathieu(2, 5.0), 4);
  CHECK(n >= 3);
  CHECK(n <= 8);
}

TEST_CASE("band grid serialization round-trips and the CSV has the right shape") {
  const auto op = PeriodicOperator::mathieu_1d(0.5);
  const auto bands = compute_bands(op, 8, 3, 4);
  const auto back = band_grid_deserialize(band_grid_serialize(bands));
  REQUIRE(back.has_value());
  CHECK(back->resolution == 8);
  CHECK((back->values - bands.values).cwiseAbs().maxCoeff() == 0.0);
  const std::string csv = band_grid_csv(bands);
  CHECK(csv.substr(0, csv.find('\n')) == "k1,lambda1,lambda2,lambda3");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);  // header + 8 rows
}

TEST_CASE("bottom gap has no lower side") {
  const auto bands = free_bands_2d();
  const auto op = PeriodicOperator::free_laplacian(2);
  CHECK_THROWS(locate_edge(op, bands, bottom_gap(bands), GapSide::Lower, 2));
}
