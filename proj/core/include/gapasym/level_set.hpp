#pragma once

#include "gapasym/common.hpp"
#include "gapasym/dispersion_field.hpp"

#include <vector>

namespace gapasym {

/// Tangent frame e_{s,2..d} = R_s^{-1}(e_l), where R_s rotates s to e1 inside
/// span{s, e1} and fixes its orthogonal complement. For s within 1e-8 of e1
/// the continuity limit {e2, ..., ed} is returned; near -e1 the rotation
/// plane is pinned to (e1, e2). Columns of the result are the frame vectors.
MatrixXd tangent_frame(const VectorXd& s);

/// Gauss-map inversion record on the level hypersurface E = lambda.
struct SupportPoint {
  VectorXd s;
  double lambda = 0.0;
  VectorXd beta_s;
  double h = 0.0;          // support value <s, beta_s>
  double grad_norm = 0.0;  // |grad E(beta_s)|
  MatrixXd frame;          // d x (d-1) tangent frame
  double proj_hess_det = 0.0;  // det(-e_p . Hess E e_q)
  double curvature = 0.0;      // Gauss-Kronecker curvature of Gamma_lambda
  double newton_residual = 0.0;
  MatrixXd hess;  // Hess E(beta_s), kept for the asymptotic prefactors
};

struct SupportTolerances {
  double tol_level = 1e-11;
  double tol_gauss = 1e-11;
  int max_iterations = 80;
  int max_backtracks = 30;
};

/// Damped Newton on {grad E(beta) = mu s, E(beta) = lambda} with mu < 0,
/// initialized from the quadratic model beta0 = c H^{-1} s,
/// c = sqrt(-2 lambda / (s . H^{-1} s)). `edge_hessian` is that H.
SupportPoint support_point(DispersionField& dispersion, const MatrixXd& edge_hessian,
                           double lambda, const VectorXd& s,
                           const SupportTolerances& tol = {});

/// Closed polyline approximation of Gamma_lambda (d = 2 only): one radial
/// root solve of E(t (cos theta, sin theta)) = lambda per angle.
std::vector<VectorXd> level_set_trace(DispersionField& dispersion, double lambda,
                                      int angular_resolution, double radius_cap);

/// Signed-area convexity test for a closed polyline (cross products of
/// consecutive edges share one sign).
bool polyline_is_convex(const std::vector<VectorXd>& polyline);

/// argmax over Gamma_lambda of <s, beta> by golden-section refinement in the
/// trace angle (d = 2): the brute-force oracle for support_point.
VectorXd trace_argmax(DispersionField& dispersion, double lambda, const VectorXd& s,
                      double radius_cap);

/// Radial root of E(t u) = lambda for t > 0 (bisection bracket + Newton
/// polish). Throws when no bracket exists below radius_cap.
double radial_root(DispersionField& dispersion, const VectorXd& unit_direction,
                   double lambda, double radius_cap, double t_guess = 0.0);

}  // namespace gapasym
