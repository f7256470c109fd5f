#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "gapasym/band_structure.hpp"
#include "gapasym/complex_dispersion.hpp"
#include "test_helpers.hpp"

using namespace gapasym;

namespace {

struct FreeSetup {
  PeriodicOperator op = PeriodicOperator::free_laplacian(2);
  BandEdge edge;
  FreeSetup() {
    const auto bands = compute_bands(op, 8, 4, 2);
    edge = locate_edge(op, bands, bottom_gap(bands), GapSide::Upper, 2);
  }
};

struct MathieuSetup {
  double q;
  PeriodicOperator op;
  BandEdge edge;
  int cutoff;
  explicit MathieuSetup(double q_, int dim, int cutoff_)
      : q(q_),
        op(dim == 1 ? PeriodicOperator::mathieu_1d(q_)
                    : PeriodicOperator::separable_mathieu(dim, q_)),
        cutoff(cutoff_) {
    const auto bands = compute_bands(op, 16, 4, cutoff_);
    const auto gaps = find_gaps(bands);
    REQUIRE(!gaps.empty());
    edge = locate_edge(op, bands, gaps[0], GapSide::Lower, cutoff_);
  }
};

}  // namespace

TEST_CASE("free dispersion is exactly E = -|beta|^2 with derivatives") {
  FreeSetup s;
  DispersionTracker tracker(s.op, s.edge, 2);
  VectorXd beta(2);
  beta << 0.31, -0.44;
  const auto sample = tracker.sample(beta);
  CHECK(std::abs(sample.energy + beta.squaredNorm()) <= 1e-12);
  CHECK((sample.grad + 2.0 * beta).norm() <= 1e-8);
  CHECK((sample.hessian + 2.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(sample.reality_defect <= 1e-13);
}

TEST_CASE("at beta = 0 the dispersion Hessian is minus the edge Hessian") {
  MathieuSetup s(5.0, 2, 6);
  DispersionTracker tracker(s.op, s.edge, 6);
  const auto sample = tracker.sample(VectorXd::Zero(2));
  CHECK(std::abs(sample.energy) <= 1e-10);
  CHECK(sample.grad.norm() <= 1e-6);
  CHECK((sample.hessian + s.edge.hessian).cwiseAbs().maxCoeff() <=
        1e-5 * s.edge.hessian.norm());
}

TEST_CASE("separable dispersion splits into 1d continuations") {
  MathieuSetup s(5.0, 2, 6);
  DispersionTracker tracker(s.op, s.edge, 6);
  VectorXd beta(2);
  beta << 0.35, 0.2;
  const double e2d = tracker.energy(beta);
  // independent dense 1d non-Hermitian continuations (working frame: the
  // band-1 maximum flips the sign)
  const double mu_pi = testo::mathieu_bands_1d(s.q, kPi, 20)[0];
  const cxd e1 = testo::mathieu_band1_continued(s.q, beta[0], 20);
  const cxd e2 = testo::mathieu_band1_continued(s.q, beta[1], 20);
  CHECK(std::abs(e1.imag()) <= 1e-10);
  const double expected = -((e1.real() - mu_pi) + (e2.real() - mu_pi));
  CHECK(std::abs(e2d - expected) <= 1e-9 * (1.0 + std::abs(expected)));
}

TEST_CASE("continue_ray on the free operator reproduces -t^2") {
  FreeSetup s;
  DispersionTracker tracker(s.op, s.edge, 2);
  VectorXd dir(2);
  dir << std::cos(0.7), std::sin(0.7);
  StepControl ctl;
  ctl.t_max = 1.2;
  const auto ray = continue_ray(tracker, dir, ctl);
  CHECK(ray.size() > 5);
  for (const auto& smp : ray) {
    CHECK(std::abs(smp.energy + smp.beta.squaredNorm()) <= 1e-10);
  }
  CHECK(ray.back().beta.norm() == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("continue_ray with t_max = 0 returns the single edge sample") {
  FreeSetup s;
  DispersionTracker tracker(s.op, s.edge, 2);
  VectorXd dir(2);
  dir << 1.0, 0.0;
  StepControl ctl;
  ctl.t_max = 0.0;
  const auto ray = continue_ray(tracker, dir, ctl);
  CHECK(ray.size() == 1);
  CHECK(ray[0].beta.norm() == 0.0);
}

TEST_CASE("mathieu 1d ray from the gap edge decreases strictly and concavely") {
  // q = 0.5 has its band-1/band-2 collision near |beta| ~ 0.23; stay inside
  MathieuSetup s(0.5, 1, 12);
  DispersionTracker tracker(s.op, s.edge, 12);
  VectorXd dir(1);
  dir << 1.0;
  StepControl ctl;
  ctl.t_max = 0.18;
  ctl.step_init = 0.02;
  ctl.step_max = 0.03;
  const auto ray = continue_ray(tracker, dir, ctl);
  CHECK(ray.size() >= 5);
  for (std::size_t i = 1; i < ray.size(); ++i) {
    CHECK(ray[i].energy < ray[i - 1].energy);        // strict decrease
    CHECK(ray[i].hessian(0, 0) < 0.0);               // concavity along the ray
    // dense 1d oracle at each accepted t (working frame flips the sign)
    const double b = ray[i].beta[0];
    const cxd cont = testo::mathieu_band1_continued(s.q, b, 16);
    const double expected = -(cont.real() - s.edge.edge_energy);
    CHECK(std::abs(ray[i].energy - expected) <= 1e-9 * (1 + std::abs(expected)));
  }
}

TEST_CASE("concavity radius: whole sampled range for free, positive for mathieu") {
  FreeSetup s;
  std::vector<VectorXd> dirs;
  for (int i = 0; i < 8; ++i) {
    VectorXd d(2);
    d << std::cos(kTwoPi * i / 8), std::sin(kTwoPi * i / 8);
    dirs.push_back(d);
  }
  CHECK(concavity_radius(s.op, s.edge, dirs, 0.8, 2) ==
        doctest::Approx(0.8).epsilon(1e-12));
  // degenerate single-direction sampling is allowed (documented non-conservative)
  CHECK(concavity_radius(s.op, s.edge, {dirs[0]}, 0.5, 2) ==
        doctest::Approx(0.5).epsilon(1e-12));

  MathieuSetup m(5.0, 2, 5);
  const double rad = concavity_radius(m.op, m.edge, {dirs[0], dirs[2]}, 1.2, 5);
  CHECK(rad > 0.3);
}

TEST_CASE("gradient check: tracker gradient matches independent Richardson steps") {
  // the q = 5 branch has a wide gap, so these betas sit deep inside the
  // analyticity region where finite differences are clean
  MathieuSetup s(5.0, 1, 10);
  DispersionTracker tracker(s.op, s.edge, 10);
  for (double b : {0.1, 0.2, 0.35, 0.5}) {
    VectorXd beta(1);
    beta << b;
    const auto sample = tracker.sample(beta);
    auto e = [&](double t) {
      VectorXd bb(1);
      bb << t;
      return tracker.energy(bb);
    };
    const double h = 3.7e-4;  // independent of the tracker's own step
    auto central = [&](double step) { return (e(b + step) - e(b - step)) / (2 * step); };
    const double ref = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    CHECK(std::abs(sample.grad[0] - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("dispersion symmetry and monotone gap approach") {
  MathieuSetup s(5.0, 2, 5);
  DispersionTracker tracker(s.op, s.edge, 5);
  VectorXd beta(2);
  beta << 0.21, -0.13;
  CHECK(std::abs(tracker.energy(beta) - tracker.energy(-beta)) <= 1e-10);
  // E < 0 away from 0 and sup E = E(0) = 0 on the sampled ball
  CHECK(tracker.energy(beta) < 0.0);
  CHECK(std::abs(tracker.energy(VectorXd::Zero(2))) <= 1e-10);
}

TEST_CASE("bloch pair: free operator gives the flat eigenfunction with F = 1") {
  FreeSetup s;
  DispersionTracker tracker(s.op, s.edge, 2);
  VectorXd beta(2);
  beta << 0.3, 0.1;
  const auto pair = bloch_pair(tracker, beta);
  CHECK(std::abs(pair.pairing - cxd(1.0, 0.0)) <= 1e-12);
  VectorXd x(2);
  x << 0.63, 0.17;
  const auto [px, mx] = evaluate_bloch(pair, x);
  CHECK(std::abs(px - cxd(1.0, 0.0)) <= 1e-12);
  CHECK(std::abs(mx - cxd(1.0, 0.0)) <= 1e-12);
}

TEST_CASE("bloch pair at beta = 0 has F = 1 under the unit-norm gauge") {
  MathieuSetup s(5.0, 2, 5);
  DispersionTracker tracker(s.op, s.edge, 5);
  const auto pair = bloch_pair(tracker, VectorXd::Zero(2));
  CHECK(std::abs(pair.pairing - cxd(1.0, 0.0)) <= 1e-10);
  CHECK(std::abs(pair.conj_alignment - 1.0) <= 1e-10);
}

TEST_CASE("bloch evaluation is 1-periodic and separable pairs tensor") {
  MathieuSetup s(5.0, 2, 6);
  DispersionTracker tracker(s.op, s.edge, 6);
  VectorXd beta(2);
  beta << 0.25, 0.25;
  const auto pair = bloch_pair(tracker, beta);

  VectorXd x(2), gamma(2);
  x << 0.3, 0.7;
  gamma << 2.0, -1.0;
  const auto a = evaluate_bloch(pair, x);
  const auto b = evaluate_bloch(pair, x + gamma);
  CHECK(std::abs(a.first - b.first) <= 1e-12);
  CHECK(std::abs(a.second - b.second) <= 1e-12);

  // |F_2d| equals the product of the 1d pairing magnitudes
  const auto [e1, v1p] = testo::mathieu_band1_pair(s.q, beta[0], 20);
  const auto [e2, v1m] = testo::mathieu_band1_pair(s.q, -beta[0], 20);
  const cxd f1 = v1m.dot(v1p);
  CHECK(std::abs(std::abs(pair.pairing) - std::abs(f1) * std::abs(f1)) <= 1e-8);

  // and the tensor structure shows in the evaluated factors
  auto phi1 = [&](const Eigen::VectorXcd& c, double t) {
    cxd acc{0, 0};
    for (int m = -20; m <= 20; ++m) acc += c[m + 20] * std::polar(1.0, kTwoPi * m * t);
    return acc;
  };
  const cxd lhs = a.first * pair.pairing;  // gauge-free combination
  const cxd rhs = phi1(v1p, x[0]) * phi1(v1p, x[1]) * f1 * f1;
  CHECK(std::abs(std::abs(lhs) - std::abs(rhs)) <= 1e-8 * std::abs(rhs));
}

TEST_CASE("continuation beyond the branch collision fails loudly") {
  MathieuSetup s(0.5, 1, 8);
  DispersionTracker tracker(s.op, s.edge, 8);
  VectorXd beta(1);
  beta << 2.0;  // far past the band-1/band-2 collision of the q = 0.5 branch
  CHECK_THROWS(tracker.energy(beta));
}
