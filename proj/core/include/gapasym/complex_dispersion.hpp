#pragma once

#include "gapasym/band_structure.hpp"
#include "gapasym/dispersion_field.hpp"
#include "gapasym/eigs.hpp"

#include <vector>

namespace gapasym {

/// One point of the continued dispersion E(beta) = working-frame
/// lambda_j(k0 + i beta), with finite-difference derivatives and the tracked
/// fiber eigenvector (gauge: unit norm, first significant coefficient real
/// positive).
struct DispersionSample {
  VectorXd beta;
  double energy = 0.0;
  VectorXd grad;
  MatrixXd hessian;
  VectorXcd eigvec;
  double reality_defect = 0.0;
  double isolation_margin = 0.0;
};

struct TrackerOptions {
  double overlap_min = 0.5;    // eigenvector continuity threshold
  int max_halvings = 25;
  double walk_step = 0.1;      // continuation step between anchors
  double tol_real = 1e-8;      // reality defect limit, scaled by (1 + |E|)
  double ambiguity_tol = 1e-7; // eigenvalue distance treated as a branch tie
  double fd_step = 1e-3;       // central-difference step for grad / hessian
};

/// Branch-tracked continuation of the edge band to complex quasimomenta.
/// Anchors accumulate along queried paths so nearby evaluations cost one
/// factorization. Not thread-safe; use one tracker per thread.
class DispersionTracker {
 public:
  DispersionTracker(const PeriodicOperator& op, const BandEdge& edge, int cutoff,
                    TrackerOptions opts = {});

  int dim() const { return op_->dim(); }
  const BandEdge& edge() const { return edge_; }
  const FourierIndexSet& basis() const { return basis_; }
  const TrackerOptions& options() const { return opts_; }

  /// Tracked fiber eigenpair at kappa = k0 + i beta.
  TrackedPair pair_at(const VectorXd& beta);
  /// Tracked fiber eigenpair at an arbitrary complex quasimomentum reached by
  /// continuation from the nearest anchor. Throws on persistent overlap
  /// failure or branch ambiguity.
  TrackedPair pair_at_kappa(const VectorXcd& kappa);

  /// Working-frame E(beta); throws when the reality defect exceeds tolerance.
  double energy(const VectorXd& beta);
  /// Full sample with central-difference gradient and Hessian.
  DispersionSample sample(const VectorXd& beta);

 private:
  struct Anchor {
    VectorXcd kappa;
    cxd value;  // physical fiber eigenvalue
    VectorXcd vec;
  };
  TrackedPair step_to(const VectorXcd& kappa, const Anchor& from, bool add_anchors);
  const Anchor& nearest_anchor(const VectorXcd& kappa) const;

  const PeriodicOperator* op_;
  BandEdge edge_;
  FourierIndexSet basis_;
  TrackerOptions opts_;
  std::vector<Anchor> anchors_;
};

/// Unit norm and a real positive leading coefficient (first index whose
/// magnitude reaches half the maximum). Returns the applied scale factor.
cxd gauge_fix(VectorXcd& v);

DispersionSample dispersion_at(const PeriodicOperator& op, const BandEdge& edge,
                               const VectorXd& beta, int cutoff,
                               const TrackerOptions& opts = {});

struct StepControl {
  double t_max = 1.0;
  double step_init = 0.05;
  double step_max = 0.1;
};

/// Walks beta = t * unit_direction from t = 0, appending samples while
/// Hess E stays negative definite; stops at t_max or at concavity loss.
std::vector<DispersionSample> continue_ray(DispersionTracker& tracker,
                                           const VectorXd& unit_direction,
                                           const StepControl& control);

/// Largest radius r such that every sampled direction keeps Hess E negative
/// definite and the reality defect within tolerance for |beta| <= r.
/// Conservative: min over directions.
double concavity_radius(const PeriodicOperator& op, const BandEdge& edge,
                        const std::vector<VectorXd>& directions, double t_max,
                        int cutoff, const TrackerOptions& opts = {});

/// Eigenfunction pair phi(k0 + i beta), phi(k0 - i beta) from two independent
/// tracked solves, and their L2(T) pairing F.
struct BlochPair {
  VectorXd beta;
  VectorXcd phi_plus;
  VectorXcd phi_minus;
  cxd pairing{};
  FourierIndexSet basis{1, 0};
  /// |phi_plus^T phi_minus| for unit vectors: 1 when phi_minus is a phase
  /// times conj(phi_plus). Reported as a diagnostic, never assumed.
  double conj_alignment = 0.0;
};

BlochPair bloch_pair(DispersionTracker& tracker, const VectorXd& beta,
                     double tol_pairing = 1e-8);

/// Values (phi_plus(x), phi_minus(x)) of the periodic factors at a point;
/// exact 1-periodicity via the fractional part.
std::pair<cxd, cxd> evaluate_bloch(const BlochPair& pair, const VectorXd& x);

/// DispersionField backed by a tracker (finite-difference derivatives).
class TrackedDispersionField : public DispersionField {
 public:
  explicit TrackedDispersionField(DispersionTracker& tracker) : t_(&tracker) {}
  int dim() const override { return t_->dim(); }
  double value(const VectorXd& beta) override { return t_->energy(beta); }
  VectorXd gradient(const VectorXd& beta) override;
  MatrixXd hessian(const VectorXd& beta) override;

 private:
  DispersionTracker* t_;
};

}  // namespace gapasym
