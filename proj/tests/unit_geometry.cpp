#include <doctest.h>

#include <random>

#include "gapasym/band_structure.hpp"
#include "gapasym/complex_dispersion.hpp"
#include "gapasym/level_set.hpp"
#include "test_helpers.hpp"

using namespace gapasym;

namespace {

VectorXd unit2(double theta) {
  VectorXd s(2);
  s << std::cos(theta), std::sin(theta);
  return s;
}

MatrixXd diag2(double a, double b) {
  MatrixXd m(2, 2);
  m << a, 0.0, 0.0, b;
  return m;
}

}  // namespace

TEST_CASE("tangent frame on the axes and in d = 3") {
  VectorXd e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK((tangent_frame(e1).col(0) - e2).norm() <= 1e-14);
  CHECK((tangent_frame(e2).col(0) + e1).norm() <= 1e-14);  // R_s^{-1} e2 = -e1

  VectorXd f1(3);
  f1 << 1, 0, 0;
  const MatrixXd fr = tangent_frame(f1);
  CHECK(fr(1, 0) == 1.0);
  CHECK(fr(2, 1) == 1.0);
}

TEST_CASE("tangent frame is orthonormal and orthogonal to s") {
  for (int d : {2, 3}) {
    std::mt19937_64 rng(d);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 20; ++t) {
      VectorXd s(d);
      for (int j = 0; j < d; ++j) s[j] = gauss(rng);
      s.normalize();
      const MatrixXd fr = tangent_frame(s);
      CHECK((fr.transpose() * fr - MatrixXd::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() <=
            1e-12);
      CHECK((fr.transpose() * s).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("support point on the quadratic model matches the Lagrange closed form") {
  QuadraticDispersionField field(diag2(2.0, 8.0));
  const auto sp = support_point(field, field.curvature_matrix(), -1.0, unit2(0.0));
  CHECK(std::abs(sp.beta_s[0] - 1.0) <= 1e-12);
  CHECK(std::abs(sp.beta_s[1]) <= 1e-12);
  CHECK(std::abs(sp.h - 1.0) <= 1e-12);
  CHECK(std::abs(sp.grad_norm - 2.0) <= 1e-12);
  CHECK(std::abs(sp.proj_hess_det - 8.0) <= 1e-11);  // e2 . M e2
  CHECK(sp.newton_residual <= 1e-11);
}

TEST_CASE("support point on the free dispersion: beta_s = sqrt(-lambda) s") {
  QuadraticDispersionField field(2.0 * MatrixXd::Identity(2, 2));
  const auto sp = support_point(field, field.curvature_matrix(), -0.25, unit2(1.1));
  CHECK((sp.beta_s - 0.5 * unit2(1.1)).norm() <= 1e-12);
  CHECK(std::abs(sp.h - 0.5) <= 1e-12);
  CHECK(std::abs(sp.grad_norm - 1.0) <= 1e-12);
  CHECK(std::abs(sp.proj_hess_det - 2.0) <= 1e-11);
  CHECK(std::abs(sp.curvature - 2.0) <= 1e-11);  // circle of radius 1/2
}

TEST_CASE("gauss residual across 64 directions (quadratic model)") {
  QuadraticDispersionField field(diag2(3.0, 1.4));
  for (int i = 0; i < 64; ++i) {
    const VectorXd s = unit2(kTwoPi * i / 64);
    const auto sp = support_point(field, field.curvature_matrix(), -0.7, s);
    const VectorXd g = field.gradient(sp.beta_s);
    CHECK((g / g.norm() + s).norm() <= 1e-10);
    CHECK(std::abs(field.value(sp.beta_s) + 0.7) <= 1e-10);
  }
}

TEST_CASE("level set trace: circle, ellipse, and convexity") {
  QuadraticDispersionField free_field(2.0 * MatrixXd::Identity(2, 2));
  const auto circle = level_set_trace(free_field, -0.25, 128, 3.0);
  for (const auto& p : circle) CHECK(std::abs(p.norm() - 0.5) <= 1e-10);

  QuadraticDispersionField aniso(diag2(2.0, 8.0));
  const auto ellipse = level_set_trace(aniso, -1.0, 256, 3.0);
  for (const auto& p : ellipse) {
    CHECK(std::abs(p[0] * p[0] + 4.0 * p[1] * p[1] - 1.0) <= 1e-10);
  }
  CHECK(polyline_is_convex(ellipse));
}

TEST_CASE("support optimality against every trace vertex") {
  QuadraticDispersionField field(diag2(2.0, 8.0));
  const auto trace = level_set_trace(field, -1.0, 256, 3.0);
  for (double theta : {0.3, 1.2, 2.6, 4.4}) {
    const VectorXd s = unit2(theta);
    const auto sp = support_point(field, field.curvature_matrix(), -1.0, s);
    for (const auto& p : trace) CHECK(s.dot(sp.beta_s) >= s.dot(p) - 1e-8);
  }
}

TEST_CASE("trace argmax agrees with the Newton support point") {
  QuadraticDispersionField field(diag2(2.0, 8.0));
  for (double theta : {0.0, 0.9, 2.2, 3.9, 5.6}) {
    const VectorXd s = unit2(theta);
    const auto sp = support_point(field, field.curvature_matrix(), -1.0, s);
    const VectorXd argmax = trace_argmax(field, -1.0, s, 3.0);
    CHECK((argmax - sp.beta_s).norm() <= 1e-6);
  }
}

TEST_CASE("frame invariance of the projected-Hessian determinant (d = 3)") {
  MatrixXd m = MatrixXd::Zero(3, 3);
  m.diagonal() << 2.0, 5.0, 9.0;
  m(0, 1) = m(1, 0) = 0.4;
  QuadraticDispersionField field(m);
  VectorXd s(3);
  s << 0.2, -0.5, 0.84;
  s.normalize();
  const auto sp = support_point(field, field.curvature_matrix(), -0.6, s);

  // rotate the tangent frame by a random angle inside s-perp
  const MatrixXd fr = sp.frame;
  const double ang = 0.77;
  MatrixXd rot(2, 2);
  rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  const MatrixXd fr2 = fr * rot;
  const MatrixXd hess = field.hessian(sp.beta_s);
  const double det1 = (-fr.transpose() * hess * fr).determinant();
  const double det2 = (-fr2.transpose() * hess * fr2).determinant();
  CHECK(std::abs(det1 - det2) <= 1e-12 * std::abs(det1));
  CHECK(std::abs(det1 - sp.proj_hess_det) <= 1e-12 * std::abs(det1));
}

TEST_CASE("support levels shrink toward the edge and depend smoothly on s") {
  QuadraticDispersionField field(diag2(2.0, 8.0));
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {-1.0, -0.5, -0.25, -0.1, -0.05}) {
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      const auto sp =
          support_point(field, field.curvature_matrix(), lambda, unit2(kTwoPi * i / 16));
      worst = std::max(worst, sp.beta_s.norm());
    }
    CHECK(worst < prev);
    prev = worst;
  }
  // adjacent directions move beta_s proportionally to the angle step
  const double dth = kTwoPi / 256;
  VectorXd last;
  for (int i = 0; i <= 32; ++i) {
    const auto sp =
        support_point(field, field.curvature_matrix(), -1.0, unit2(i * dth));
    if (last.size()) CHECK((sp.beta_s - last).norm() <= 2.5 * dth);
    last = sp.beta_s;
  }
}

TEST_CASE("separable mathieu support point: diagonal direction stays diagonal") {
  const double q = 5.0;
  const auto op = PeriodicOperator::separable_mathieu(2, q);
  const auto bands = compute_bands(op, 16, 4, 5);
  const auto gaps = find_gaps(bands);
  REQUIRE(!gaps.empty());
  const auto edge = locate_edge(op, bands, gaps[0], GapSide::Lower, 5);
  const double lambda = -0.2 * gaps[0].width();

  DispersionTracker tracker(op, edge, 5);
  TrackedDispersionField field(tracker);
  const VectorXd s = unit2(kPi / 4);
  const auto sp = support_point(field, edge.hessian, lambda, s);
  CHECK(std::abs(sp.beta_s[0] - sp.beta_s[1]) <= 1e-9);
  CHECK(sp.newton_residual <= 1e-11);
  CHECK(std::abs(field.value(sp.beta_s) - lambda) <= 1e-10);

  // brute-force validation against the polyline trace argmax
  DispersionTracker tracker2(op, edge, 5);
  TrackedDispersionField field2(tracker2);
  const VectorXd bf = trace_argmax(field2, lambda, s, 1.5);
  CHECK((bf - sp.beta_s).norm() <= 1e-6);
}

TEST_CASE("level outside the reachable range is reported") {
  QuadraticDispersionField field(2.0 * MatrixXd::Identity(2, 2));
  CHECK_THROWS(radial_root(field, unit2(0.0), -100.0, 1.0));
}

TEST_CASE("support point rejects a positive level") {
  QuadraticDispersionField field(2.0 * MatrixXd::Identity(2, 2));
  CHECK_THROWS(support_point(field, field.curvature_matrix(), 0.25, unit2(0.0)));
}
