#include "gapasym/level_set.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gapasym/kvdoc.hpp"

namespace gapasym {

MatrixXd tangent_frame(const VectorXd& s) {
  const int d = static_cast<int>(s.size());
  require(std::abs(s.norm() - 1.0) <= 1e-10, "tangent_frame: s must be a unit vector");
  MatrixXd frame(d, d - 1);
  VectorXd e1 = VectorXd::Zero(d);
  e1[0] = 1.0;

  const double c = s[0];
  VectorXd w = s - c * e1;
  const double sn = w.norm();

  if (sn <= 1e-8) {
    // s at (or numerically at) +-e1: continuity limit at +e1, pinned
    // (e1, e2) rotation plane at -e1
    for (int l = 2; l <= d; ++l) {
      VectorXd el = VectorXd::Zero(d);
      el[l - 1] = 1.0;
      if (c < 0.0 && l == 2) el = -el;
      frame.col(l - 2) = el;
    }
    return frame;
  }
  w /= sn;
  for (int l = 2; l <= d; ++l) {
    VectorXd el = VectorXd::Zero(d);
    el[l - 1] = 1.0;
    const double b = w[l - 1];  // component of e_l along w (e_l . e1 = 0)
    // R_s^{-1}(e_l) = e_l - b w + b (cos * w - sin * e1)
    frame.col(l - 2) = el + b * ((c - 1.0) * w - sn * e1);
  }
  return frame;
}

namespace {

double det_projected(const MatrixXd& hess, const MatrixXd& frame) {
  const int m = static_cast<int>(frame.cols());
  if (m == 0) return 1.0;  // empty product: d = 1
  const MatrixXd p = -frame.transpose() * hess * frame;
  return p.determinant();
}

}  // namespace

SupportPoint support_point(DispersionField& dispersion, const MatrixXd& edge_hessian,
                           double lambda, const VectorXd& s,
                           const SupportTolerances& tol) {
  const int d = dispersion.dim();
  require(lambda < 0.0, "support_point: lambda must lie below the working edge (< 0)");
  require(std::abs(s.norm() - 1.0) <= 1e-10, "support_point: s must be a unit vector");

  // quadratic-model initial guess
  const VectorXd hs = edge_hessian.ldlt().solve(s);
  const double q = s.dot(hs);
  require(q > 0.0, "support_point: edge Hessian is not positive definite along s");
  const double c = std::sqrt(-2.0 * lambda / q);
  VectorXd beta = c * hs;
  double mu = -dispersion.gradient(beta).norm();

  auto residual = [&](const VectorXd& b, double m_, VectorXd& grad_out) {
    grad_out = dispersion.gradient(b);
    VectorXd r(d + 1);
    r.head(d) = grad_out - m_ * s;
    r[d] = dispersion.value(b) - lambda;
    return r;
  };

  VectorXd grad(d);
  VectorXd r = residual(beta, mu, grad);
  double rn = r.norm();
  int it = 0;
  for (; it < tol.max_iterations; ++it) {
    if (rn <= 1e-14 * (1.0 + std::abs(lambda))) break;
    MatrixXd jac = MatrixXd::Zero(d + 1, d + 1);
    jac.topLeftCorner(d, d) = dispersion.hessian(beta);
    jac.block(0, d, d, 1) = -s;
    jac.block(d, 0, 1, d) = grad.transpose();
    const VectorXd step = jac.fullPivLu().solve(-r);
    double t = 1.0;
    VectorXd beta_n;
    double mu_n = 0.0, rn_n = 0.0;
    VectorXd r_n, grad_n(d);
    bool improved = false;
    for (int bt = 0; bt < tol.max_backtracks; ++bt) {
      beta_n = beta + t * step.head(d);
      mu_n = mu + t * step[d];
      try {
        r_n = residual(beta_n, mu_n, grad_n);
        rn_n = r_n.norm();
      } catch (const NumericalError&) {
        t *= 0.5;  // stepped outside the continuation region
        continue;
      }
      if (rn_n < rn * (1.0 - 1e-4 * t) || rn_n < 1e-14 * (1.0 + std::abs(lambda))) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    beta = beta_n;
    mu = mu_n;
    r = r_n;
    rn = rn_n;
    grad = grad_n;
  }
  require(rn <= tol.tol_gauss,
          "support_point: Newton did not converge (residual " + format_g17(rn) + ")");
  require(mu < 0.0, "support_point: converged with mu >= 0 (wrong branch of the Gauss map)");

  SupportPoint sp;
  sp.s = s;
  sp.lambda = lambda;
  sp.beta_s = beta;
  sp.h = s.dot(beta);
  sp.grad_norm = grad.norm();
  sp.frame = tangent_frame(s);
  sp.hess = dispersion.hessian(beta);
  sp.proj_hess_det = det_projected(sp.hess, sp.frame);
  require(sp.proj_hess_det > 0.0,
          "support_point: projected Hessian not positive definite (outside the "
          "concavity region)");
  sp.curvature = sp.proj_hess_det / std::pow(sp.grad_norm, d - 1);
  sp.newton_residual = rn;

  const double level_defect = std::abs(dispersion.value(beta) - lambda);
  require(level_defect <= tol.tol_level * (1.0 + std::abs(lambda)),
          "support_point: level defect " + format_g17(level_defect));
  return sp;
}

double radial_root(DispersionField& dispersion, const VectorXd& unit_direction,
                   double lambda, double radius_cap, double t_guess) {
  require(lambda < 0.0, "radial_root: lambda must be negative");
  auto f = [&](double t) { return dispersion.value(t * unit_direction) - lambda; };

  double lo = 0.0;            // f(0) = -lambda > 0
  double hi = t_guess > 0.0 ? t_guess : 0.5 * radius_cap;
  double flo = -lambda;
  double fhi = f(hi);
  int guard = 0;
  while (fhi > 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 1.6;
    if (hi > radius_cap || ++guard > 60)
      throw NumericalError(
          "radial_root: level not bracketed within the concavity radius "
          "(|lambda| too large)");
    fhi = f(hi);
  }
  // bisection to a safe width, then Newton polish
  for (int i = 0; i < 40 && hi - lo > 1e-6 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  (void)flo;
  double t = 0.5 * (lo + hi);
  for (int i = 0; i < 60; ++i) {
    const double ft = f(t);
    const double dt = dispersion.gradient(t * unit_direction).dot(unit_direction);
    if (dt == 0.0) break;
    const double tn = t - ft / dt;
    if (tn <= lo || tn >= hi) {
      // fall back to bisection when Newton leaves the bracket
      if (ft > 0.0) lo = t; else hi = t;
      t = 0.5 * (lo + hi);
    } else {
      if (std::abs(tn - t) <= 1e-14 * (1.0 + t)) return tn;
      t = tn;
    }
  }
  return t;
}

std::vector<VectorXd> level_set_trace(DispersionField& dispersion, double lambda,
                                      int angular_resolution, double radius_cap) {
  require(dispersion.dim() == 2, "level_set_trace: d = 2 only");
  require(angular_resolution >= 8, "level_set_trace: resolution too small");
  std::vector<VectorXd> pts;
  pts.reserve(angular_resolution);
  double t_prev = 0.0;
  for (int i = 0; i < angular_resolution; ++i) {
    const double theta = kTwoPi * i / angular_resolution;
    VectorXd u(2);
    u << std::cos(theta), std::sin(theta);
    const double t = radial_root(dispersion, u, lambda, radius_cap, t_prev);
    t_prev = t;
    pts.push_back(t * u);
  }
  return pts;
}

bool polyline_is_convex(const std::vector<VectorXd>& polyline) {
  const int n = static_cast<int>(polyline.size());
  if (n < 4) return true;
  int sign = 0;
  for (int i = 0; i < n; ++i) {
    const VectorXd& a = polyline[i];
    const VectorXd& b = polyline[(i + 1) % n];
    const VectorXd& c = polyline[(i + 2) % n];
    const double cross =
        (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
    if (std::abs(cross) < 1e-15) continue;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

VectorXd trace_argmax(DispersionField& dispersion, double lambda, const VectorXd& s,
                      double radius_cap) {
  require(dispersion.dim() == 2, "trace_argmax: d = 2 only");
  auto point_at = [&](double theta, double guess) {
    VectorXd u(2);
    u << std::cos(theta), std::sin(theta);
    return VectorXd(radial_root(dispersion, u, lambda, radius_cap, guess) * u);
  };
  auto objective = [&](double theta, double guess) {
    return s.dot(point_at(theta, guess));
  };

  // coarse scan for the basin, then golden-section refinement
  const int coarse = 128;
  double best_theta = 0.0, best_val = -std::numeric_limits<double>::infinity();
  double guess = 0.0;
  for (int i = 0; i < coarse; ++i) {
    const double theta = kTwoPi * i / coarse;
    VectorXd u(2);
    u << std::cos(theta), std::sin(theta);
    const double t = radial_root(dispersion, u, lambda, radius_cap, guess);
    guess = t;  // radial warm start for the next angle
    const double v = s.dot(t * u);
    if (v > best_val) {
      best_val = v;
      best_theta = theta;
    }
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best_theta - kTwoPi / coarse;
  double b = best_theta + kTwoPi / coarse;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = objective(x1, 0.0);
  double f2 = objective(x2, 0.0);
  for (int i = 0; i < 80 && (b - a) > 1e-12; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(x2, 0.0);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(x1, 0.0);
    }
  }
  return point_at(0.5 * (a + b), 0.0);
}

}  // namespace gapasym
