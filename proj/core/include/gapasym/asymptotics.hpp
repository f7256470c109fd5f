#pragma once

#include "gapasym/complex_dispersion.hpp"
#include "gapasym/level_set.hpp"

#include <memory>

namespace gapasym {

/// Physical fiber eigenvalue lambda_j(kappa) at complex quasimomentum, the
/// scalar the gap integrals sample. Implementations must be clonable so
/// quadrature lines can run in parallel with independent continuation state.
class ComplexDispersion {
 public:
  virtual ~ComplexDispersion() = default;
  virtual int dim() const = 0;
  virtual cxd lambda_at(const VectorXcd& kappa) = 0;
  virtual std::unique_ptr<ComplexDispersion> clone() const = 0;
};

/// lambda(kappa) = kappa^T A0 kappa + v0 (entire): the exact dispersion of a
/// constant-coefficient operator; the free Laplacian is A0 = I, v0 = 0.
class FreeComplexDispersion : public ComplexDispersion {
 public:
  FreeComplexDispersion(MatrixXd a0, double v0) : a0_(std::move(a0)), v0_(v0) {}
  explicit FreeComplexDispersion(int dim) : a0_(MatrixXd::Identity(dim, dim)), v0_(0.0) {}
  int dim() const override { return static_cast<int>(a0_.rows()); }
  cxd lambda_at(const VectorXcd& kappa) override {
    return (kappa.transpose() * a0_.cast<cxd>() * kappa).value() + v0_;
  }
  std::unique_ptr<ComplexDispersion> clone() const override {
    return std::make_unique<FreeComplexDispersion>(*this);
  }

 private:
  MatrixXd a0_;
  double v0_;
};

/// Analytic continuation of the quadratic edge model: working energy
/// -1/2 zeta^T H zeta at zeta = -i (kappa - k0), mapped back to the physical
/// frame of `edge`. Synthetic-dispersion oracle for the integral routines.
class QuadraticComplexDispersion : public ComplexDispersion {
 public:
  QuadraticComplexDispersion(const BandEdge& edge, MatrixXd h)
      : edge_(edge), h_(std::move(h)) {}
  int dim() const override { return static_cast<int>(h_.rows()); }
  cxd lambda_at(const VectorXcd& kappa) override {
    VectorXcd zeta = -cxd(0, 1) * (kappa - to_complex(edge_.k0));
    const cxd work = -0.5 * (zeta.transpose() * h_.cast<cxd>() * zeta).value();
    return edge_.edge_energy + static_cast<double>(edge_.orientation) * work;
  }
  std::unique_ptr<ComplexDispersion> clone() const override {
    return std::make_unique<QuadraticComplexDispersion>(*this);
  }

 private:
  BandEdge edge_;
  MatrixXd h_;
};

/// Branch-tracked fiber eigenvalue: continuation seeded from the previous
/// query (falling back to the edge eigenpair after large jumps).
class TrackedComplexDispersion : public ComplexDispersion {
 public:
  TrackedComplexDispersion(const PeriodicOperator& op, const BandEdge& edge, int cutoff,
                           TrackerOptions opts = {});
  int dim() const override { return op_->dim(); }
  cxd lambda_at(const VectorXcd& kappa) override { return pair_at(kappa).value; }
  TrackedPair pair_at(const VectorXcd& kappa);
  std::unique_ptr<ComplexDispersion> clone() const override;
  const FourierIndexSet& basis() const { return basis_; }

 private:
  const PeriodicOperator* op_;
  BandEdge edge_;
  int cutoff_;
  FourierIndexSet basis_;
  TrackerOptions opts_;
  cxd root_value_;
  VectorXcd root_vec_;
  VectorXcd last_kappa_;
  cxd last_value_;
  VectorXcd last_vec_;
};

// ---------------------------------------------------------------------------
// Leading term of the gap-edge Green's function asymptotics
// ---------------------------------------------------------------------------

struct LeadingTermInputs {
  const BandEdge* edge = nullptr;
  const SupportPoint* sp = nullptr;
  const BlochPair* pair = nullptr;
  VectorXd x, y;
};

/// e^{(x-y).(i k0 - beta_s)} (2 pi |x-y|)^{-(d-1)/2} |grad E|^{(d-3)/2}
/// det(-P Hess E P)^{-1/2} phi_+(x) conj(phi_-(y)) / F, oriented to the
/// physical frame (band-maximum edges flip the sign of the resolvent).
cxd leading_term(const LeadingTermInputs& in);

/// Same value through the Gauss-Kronecker curvature restatement
/// (|grad E| K^{1/2})^{-1}.
cxd leading_term_curvature_form(const LeadingTermInputs& in);

/// Isotropic envelope C1 |lambda|^{(d-3)/4} e^{-C2 |lambda|^{1/2} r}
/// / r^{(d-1)/2} (lambda is the working-frame level, negative).
struct IsotropicBound {
  double c1 = 1.0;
  double c2 = 1.0;
  double lambda = -1.0;
  int dim = 2;
  double operator()(double r) const;
};
IsotropicBound isotropic_bound(double lambda, int dim, double c1, double c2);
/// C2 = min over the sweep of h(s) / |lambda|^{1/2}.
double fit_isotropic_rate(const std::vector<SupportPoint>& sweep);
/// C1 from the leading-term prefactors over the sweep (with a 10% headroom).
double fit_isotropic_amplitude(const std::vector<SupportPoint>& sweep, double safety = 1.1);

// ---------------------------------------------------------------------------
// Scalar integrals of the Floquet reduction
// ---------------------------------------------------------------------------

struct QuadOptions {
  int gl_order = 12;
  double grade_floor = 1e-9;   // innermost panel width near the singular point
  double prime_floor = 1e-5;   // transverse grading floor
  int refine = 0;              // each +1 halves every panel (convergence check)
  bool parallel = true;
};

/// Closed-form limit of the integral I (working frame, positive):
/// |grad E|^{(d-3)/2} (2 pi r)^{-(d-1)/2} det(-e . Hess E e)^{-1/2}.
double integral_I_closed_form(const SupportPoint& sp, double r);

/// Working-frame numeric I: (2 pi)^{-d} integral of
/// mu(k - k0) e^{i (k-k0).(x-y)} / (E_cont - lambda_work). Physical value is
/// edge.orientation times this. d >= 2.
cxd integral_I_numeric(ComplexDispersion& dispersion, const BandEdge& edge,
                       const SupportPoint& sp, double eta_radius, double r,
                       const QuadOptions& opts = {});

/// Reduced Green's function: (2 pi)^{-d} integral of eta(k) e^{i k.(x-y)}
/// phi(k+i beta_s, x) conj(phi(k-i beta_s, y)) / (F (lambda_j - lambda)).
/// Physical frame. Bloch data is branch-tracked per quadrature node.
cxd reduced_green_numeric(const PeriodicOperator& op, const BandEdge& edge,
                          const SupportPoint& sp, double eta_radius, const VectorXd& x,
                          const VectorXd& y, int cutoff, const QuadOptions& opts = {});

/// The companion integral with the Taylor remainder of the Bloch amplitude,
/// rho(k) - rho(k0), in the numerator; decays one half-power faster than I.
cxd integral_J_numeric(const PeriodicOperator& op, const BandEdge& edge,
                       const SupportPoint& sp, double eta_radius, const VectorXd& x,
                       const VectorXd& y, int cutoff, const QuadOptions& opts = {});

// ---------------------------------------------------------------------------
// Weierstrass branch of the complex dispersion
// ---------------------------------------------------------------------------

struct WeierstrassSample {
  VectorXcd z_prime;
  cxd a_value;  // A_s(z')
};

struct WeierstrassCheck {
  VectorXd s;
  MatrixXd q_s;  // -(1/|grad E|) (e_p . Hess E e_q)
  std::vector<WeierstrassSample> samples;
  double quadratic_residual = 0.0;  // max |A - z'.Q z'/2| / |z'|^2
};

/// Root A_s(z') of W_s(z1, z') = 0 by 1D complex Newton from the quadratic
/// prediction; W_s is the rotated complex dispersion minus the level.
cxd weierstrass_branch(ComplexDispersion& dispersion, const BandEdge& edge,
                       const SupportPoint& sp, const VectorXcd& z_prime,
                       double newton_tol = 1e-13);

/// Samples A_s on real transverse directions at |z'| = radius and accumulates
/// the quadratic-model residual.
WeierstrassCheck weierstrass_check(ComplexDispersion& dispersion, const BandEdge& edge,
                                   const SupportPoint& sp, double radius,
                                   int samples_per_axis = 2);

}  // namespace gapasym
