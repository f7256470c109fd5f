#pragma once

#include "gapasym/common.hpp"
#include "gapasym/fiber_matrix.hpp"

#include <vector>

namespace gapasym {

/// One evaluation of the resolvent kernel G_lambda(x, y) by Brillouin-zone
/// quadrature of the fiber resolvent. `value` is taken from the doubled grid;
/// `converged` records the nested-grid comparison at resolution `grid`.
struct OracleSample {
  VectorXd x, y;
  double lambda = 0.0;
  cxd value{};
  int grid = 0;  // requested resolution M per axis (value uses 2M)
  VectorXd contour_shift;
  bool converged = false;
  double doubling_defect = 0.0;  // |value(M) - value(2M)| / |value(2M)|
};

struct OracleOptions {
  double tol_quad = 1e-6;
  int max_doublings = 2;          // extra doublings when not converged
  bool reference_correction = true;  // exact constant-coefficient tail split
  double min_separation = 0.5;    // |x - y| below this is rejected
  double singular_distance = 1e-9;  // near-singular fiber detection
};

/// Classical free-space Green's functions for -Lap at lambda < 0:
/// d=1 e^{-qr}/(2q), d=2 K0(qr)/(2pi), d=3 e^{-qr}/(4 pi r), q = sqrt(-lambda).
double free_reference(double lambda, double r, int d);

/// Shared-node batch: one pass over the (shifted) Brillouin-zone grid serves
/// every (x, y) pair. All pairs must satisfy the separation precondition and
/// M must be >= 8 * ceil(max |x-y|) per axis.
std::vector<OracleSample> green_batch(const PeriodicOperator& op, double lambda,
                                      const std::vector<std::pair<VectorXd, VectorXd>>& pairs,
                                      const VectorXd& contour_shift, int cutoff, int m,
                                      const OracleOptions& opts = {});

OracleSample green_bz_integral(const PeriodicOperator& op, double lambda,
                               const VectorXd& x, const VectorXd& y, int cutoff, int m,
                               const OracleOptions& opts = {});

/// Same integral along the shifted contour k + i t beta_s, t in [0, 1);
/// agrees with green_bz_integral by contour invariance.
OracleSample green_shifted_contour(const PeriodicOperator& op, double lambda,
                                   const VectorXd& beta_s, double t, const VectorXd& x,
                                   const VectorXd& y, int cutoff, int m,
                                   const OracleOptions& opts = {});

/// Per-node distance of lambda to the spectrum of the shifted fiber
/// L(k + i t beta_s) on a coarse grid (dense solves); probes where the
/// shifted contour approaches the Fermi surface as t -> 1.
struct FiberDistanceScan {
  std::vector<VectorXd> nodes;
  VectorXd distances;
  int argmin = 0;
};
FiberDistanceScan fiber_spectral_distance_scan(const PeriodicOperator& op, double lambda,
                                               const VectorXd& beta_s, double t,
                                               int grid_resolution, int cutoff);

/// CSV export of oracle samples.
std::string oracle_samples_csv(const std::vector<OracleSample>& samples);

}  // namespace gapasym
