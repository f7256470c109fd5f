#include "gapasym/asymptotics.hpp"

#include <cmath>

#include "gapasym/kvdoc.hpp"
#include "gapasym/parallel.hpp"

namespace gapasym {

// ---------------------------------------------------------------------------
// tracked complex dispersion
// ---------------------------------------------------------------------------

TrackedComplexDispersion::TrackedComplexDispersion(const PeriodicOperator& op,
                                                   const BandEdge& edge, int cutoff,
                                                   TrackerOptions opts)
    : op_(&op), edge_(edge), cutoff_(cutoff), basis_(op.dim(), cutoff), opts_(opts) {
  const auto eig = hermitian_eigs(assemble_fiber(op, to_complex(edge_.k0), basis_).entries);
  root_value_ = cxd(eig.values[edge_.band_index - 1], 0.0);
  root_vec_ = eig.vectors.col(edge_.band_index - 1);
}

std::unique_ptr<ComplexDispersion> TrackedComplexDispersion::clone() const {
  auto copy = std::make_unique<TrackedComplexDispersion>(*op_, edge_, cutoff_, opts_);
  return copy;
}

TrackedPair TrackedComplexDispersion::pair_at(const VectorXcd& kappa) {
  VectorXcd pos = to_complex(edge_.k0);
  cxd value = root_value_;
  VectorXcd vec = root_vec_;
  if (last_kappa_.size() && (kappa - last_kappa_).norm() <= 2.0 * opts_.walk_step) {
    pos = last_kappa_;
    value = last_value_;
    vec = last_vec_;
  }
  double remaining = (kappa - pos).norm();
  double step = std::min(opts_.walk_step, std::max(remaining, 1e-16));
  int halvings = 0;
  TrackedPair pair;
  pair.value = value;
  pair.vector = vec;
  pair.seed_overlap = 1.0;
  TrackOptions topts;
  topts.ritz_block = 0;  // isolation probes are not needed on quadrature paths
  while (remaining > 0.0) {
    const double len = std::min(step, remaining);
    const VectorXcd target = pos + (kappa - pos) * (len / remaining);
    const MatrixXcd m =
        assemble_fiber_matrix(*op_, target, std::span<const VectorXi>(basis_.indices()));
    TrackedPair cand = track_eigenpair(m, value, vec, topts);
    const double overlap = std::abs(vec.normalized().dot(cand.vector));
    if (overlap < opts_.overlap_min) {
      if (++halvings > opts_.max_halvings)
        throw NumericalError("tracked dispersion: branch continuation failed at |kappa - k0| = " +
                             format_g17((target - to_complex(edge_.k0)).norm()));
      step *= 0.5;
      continue;
    }
    pos = target;
    value = cand.value;
    vec = cand.vector;
    pair = std::move(cand);
    remaining = (kappa - pos).norm();
    if (halvings > 0) {
      step = std::min(2.0 * step, opts_.walk_step);
      --halvings;
    }
  }
  last_kappa_ = kappa;
  last_value_ = value;
  last_vec_ = vec;
  pair.value = value;
  pair.vector = vec;
  return pair;
}

// ---------------------------------------------------------------------------
// leading term
// ---------------------------------------------------------------------------

namespace {

void validate_inputs(const LeadingTermInputs& in, double& r, VectorXd& diff) {
  require(in.edge && in.sp && in.pair, "leading_term: missing inputs");
  diff = in.x - in.y;
  r = diff.norm();
  require(r > 0.0, "leading_term: x and y must be distinct");
  require((diff / r - in.sp->s).norm() <= 1e-12,
          "leading_term: direction of x - y does not match the support point");
  require((in.sp->beta_s - in.pair->beta).norm() <= 1e-12,
          "leading_term: Bloch pair was computed at a different beta_s");
}

cxd bloch_factor(const LeadingTermInputs& in) {
  const cxd phi_x = evaluate_bloch(*in.pair, in.x).first;
  const cxd phi_y = evaluate_bloch(*in.pair, in.y).second;
  return phi_x * std::conj(phi_y) / in.pair->pairing;
}

}  // namespace

cxd leading_term(const LeadingTermInputs& in) {
  double r;
  VectorXd diff;
  validate_inputs(in, r, diff);
  const int d = static_cast<int>(in.x.size());
  const cxd expo = std::exp(cxd(-in.sp->beta_s.dot(diff), in.edge->k0.dot(diff)));
  const double pref = std::pow(kTwoPi * r, -0.5 * (d - 1)) *
                      std::pow(in.sp->grad_norm, 0.5 * (d - 3)) /
                      std::sqrt(in.sp->proj_hess_det);
  return static_cast<double>(in.edge->orientation) * expo * pref * bloch_factor(in);
}

cxd leading_term_curvature_form(const LeadingTermInputs& in) {
  double r;
  VectorXd diff;
  validate_inputs(in, r, diff);
  const int d = static_cast<int>(in.x.size());
  const cxd expo = std::exp(cxd(-in.sp->beta_s.dot(diff), in.edge->k0.dot(diff)));
  const double pref = std::pow(kTwoPi * r, -0.5 * (d - 1)) /
                      (in.sp->grad_norm * std::sqrt(in.sp->curvature));
  return static_cast<double>(in.edge->orientation) * expo * pref * bloch_factor(in);
}

double IsotropicBound::operator()(double r) const {
  require(r > 0.0, "isotropic bound: r must be positive");
  const double al = std::abs(lambda);
  return c1 * std::pow(al, 0.25 * (dim - 3)) *
         std::exp(-c2 * std::sqrt(al) * r) / std::pow(r, 0.5 * (dim - 1));
}

IsotropicBound isotropic_bound(double lambda, int dim, double c1, double c2) {
  require(lambda < 0.0, "isotropic bound: lambda must be negative");
  return IsotropicBound{c1, c2, lambda, dim};
}

double fit_isotropic_rate(const std::vector<SupportPoint>& sweep) {
  require(!sweep.empty(), "fit_isotropic_rate: empty sweep");
  double c2 = std::numeric_limits<double>::infinity();
  for (const auto& sp : sweep) c2 = std::min(c2, sp.h / std::sqrt(std::abs(sp.lambda)));
  return c2;
}

double fit_isotropic_amplitude(const std::vector<SupportPoint>& sweep, double safety) {
  require(!sweep.empty(), "fit_isotropic_amplitude: empty sweep");
  const int d = static_cast<int>(sweep.front().s.size());
  double c1 = 0.0;
  for (const auto& sp : sweep) {
    const double pref = std::pow(kTwoPi, -0.5 * (d - 1)) *
                        std::pow(sp.grad_norm, 0.5 * (d - 3)) /
                        std::sqrt(sp.proj_hess_det);
    c1 = std::max(c1, pref / std::pow(std::abs(sp.lambda), 0.25 * (d - 3)));
  }
  return safety * c1;
}

// ---------------------------------------------------------------------------
// graded-panel quadrature over the bump support
// ---------------------------------------------------------------------------

namespace {

// Gauss-Legendre order 12 on [-1, 1]
constexpr int kGlHalf = 6;
constexpr double kGlX[kGlHalf] = {0.12523340851146892, 0.3678314989981802,
                                  0.5873179542866175, 0.7699026741943047,
                                  0.9041172563704749, 0.9815606342467192};
constexpr double kGlW[kGlHalf] = {0.24914704581340277, 0.23349253653835481,
                                  0.20316742672306592, 0.16007832854334622,
                                  0.10693932599531843, 0.047175336386511825};

using Segments = std::vector<std::pair<double, double>>;

/// Panels over [-L, L], geometrically refined toward 0 down to `floor_w` and
/// capped at `cap`; optional refinement halves every panel.
Segments graded_symmetric(double L, double floor_w, double cap, int refine) {
  Segments half;
  double a = 0.0;
  double w = std::min(std::max(floor_w, 1e-300), cap);
  while (a < L) {
    const double b = std::min(L, a + w);
    half.emplace_back(a, b);
    a = b;
    w = std::min(2.0 * w, cap);
  }
  Segments segs;
  for (auto it = half.rbegin(); it != half.rend(); ++it)
    segs.emplace_back(-it->second, -it->first);
  segs.insert(segs.end(), half.begin(), half.end());
  for (int r = 0; r < refine; ++r) {
    Segments fine;
    fine.reserve(2 * segs.size());
    for (const auto& [lo, hi] : segs) {
      const double mid = 0.5 * (lo + hi);
      fine.emplace_back(lo, mid);
      fine.emplace_back(mid, hi);
    }
    segs = std::move(fine);
  }
  return segs;
}

template <typename F>
cxd integrate_segments(const Segments& segs, F&& f) {
  cxd total{0.0, 0.0};
  for (const auto& [lo, hi] : segs) {
    const double mid = 0.5 * (lo + hi);
    const double halfw = 0.5 * (hi - lo);
    cxd acc{0.0, 0.0};
    for (int i = 0; i < kGlHalf; ++i) {
      acc += kGlW[i] * (f(mid + halfw * kGlX[i]) + f(mid - halfw * kGlX[i]));
    }
    total += halfw * acc;
  }
  return total;
}

/// C^inf-in-the-interior bump: 1 on u <= 1/2, exp(-v^4/(1-v^4)) falloff with
/// v = 2u - 1 on (1/2, 1), 0 beyond.
double bump_profile(double u) {
  if (u <= 0.5) return 1.0;
  if (u >= 1.0) return 0.0;
  const double v = 2.0 * u - 1.0;
  const double v4 = v * v * v * v;
  return std::exp(-v4 / (1.0 - v4));
}

struct RotatedFrame {
  MatrixXd rinv;  // columns [s | tangent frame]: maps xi to k - k0
};

RotatedFrame rotated_frame(const SupportPoint& sp) {
  const int d = static_cast<int>(sp.s.size());
  MatrixXd rinv(d, d);
  rinv.col(0) = sp.s;
  for (int c = 1; c < d; ++c) rinv.col(c) = sp.frame.col(c - 1);
  return {rinv};
}

/// Transverse tensor nodes (xi', weight) over the d-1 graded axes.
struct TransverseNode {
  VectorXd xi_prime;
  double weight;
};

std::vector<TransverseNode> transverse_nodes(int d, double radius,
                                             const QuadOptions& opts) {
  std::vector<TransverseNode> nodes;
  if (d == 1) {
    nodes.push_back({VectorXd(0), 1.0});
    return nodes;
  }
  const Segments segs =
      graded_symmetric(radius, opts.prime_floor, radius / 4.0, opts.refine);
  std::vector<std::pair<double, double>> axis;  // node, weight
  for (const auto& [lo, hi] : segs) {
    const double mid = 0.5 * (lo + hi);
    const double halfw = 0.5 * (hi - lo);
    for (int i = 0; i < kGlHalf; ++i) {
      axis.emplace_back(mid + halfw * kGlX[i], halfw * kGlW[i]);
      axis.emplace_back(mid - halfw * kGlX[i], halfw * kGlW[i]);
    }
  }
  if (d == 2) {
    nodes.reserve(axis.size());
    for (const auto& [x, w] : axis) {
      VectorXd xp(1);
      xp[0] = x;
      nodes.push_back({xp, w});
    }
  } else {
    nodes.reserve(axis.size() * axis.size());
    for (const auto& [x1, w1] : axis)
      for (const auto& [x2, w2] : axis) {
        VectorXd xp(2);
        xp << x1, x2;
        nodes.push_back({xp, w1 * w2});
      }
  }
  return nodes;
}

Segments line_segments(double radius, double pole_distance, double r,
                       const QuadOptions& opts) {
  const double osc_cap = std::max(4.0 / std::max(r, 1.0), 4.0 * opts.grade_floor);
  const double cap = std::min(radius / 4.0, osc_cap);
  const double floor_w = std::max(opts.grade_floor, 0.3 * pole_distance);
  return graded_symmetric(radius, floor_w, cap, opts.refine);
}

}  // namespace

double integral_I_closed_form(const SupportPoint& sp, double r) {
  const int d = static_cast<int>(sp.s.size());
  return std::pow(sp.grad_norm, 0.5 * (d - 3)) * std::pow(kTwoPi * r, -0.5 * (d - 1)) /
         std::sqrt(sp.proj_hess_det);
}

cxd integral_I_numeric(ComplexDispersion& dispersion, const BandEdge& edge,
                       const SupportPoint& sp, double eta_radius, double r,
                       const QuadOptions& opts) {
  const int d = dispersion.dim();
  require(d >= 2, "integral_I_numeric: d >= 2 (the d = 1 limit integral is singular)");
  require(eta_radius > 0.0 && eta_radius < kPi, "integral_I_numeric: bad eta radius");
  const RotatedFrame rot = rotated_frame(sp);
  const double lambda_phys = edge.to_physical(sp.lambda);
  const double sigma = edge.orientation;

  const auto tnodes = transverse_nodes(d, eta_radius, opts);
  std::vector<cxd> line_values(tnodes.size());

  auto run_line = [&](std::size_t idx, ComplexDispersion& cd) {
    const VectorXd& xp = tnodes[idx].xi_prime;
    auto denom = [&](double xi1) {
      VectorXd xi(d);
      xi[0] = xi1;
      for (int j = 1; j < d; ++j) xi[j] = xp[j - 1];
      VectorXcd kappa = to_complex(edge.k0 + rot.rinv * xi);
      for (int j = 0; j < d; ++j) kappa[j] += cxd(0.0, sp.beta_s[j]);
      return sigma * (cd.lambda_at(kappa) - lambda_phys);
    };
    const double pole_distance = std::abs(denom(0.0)) / std::max(sp.grad_norm, 1e-12);
    const Segments segs = line_segments(eta_radius, pole_distance, r, opts);
    const double xp2 = xp.squaredNorm();
    line_values[idx] = integrate_segments(segs, [&](double xi1) {
      const double mu = bump_profile(std::sqrt(xi1 * xi1 + xp2) / eta_radius);
      if (mu == 0.0) return cxd(0.0, 0.0);
      return mu * std::exp(cxd(0.0, r * xi1)) / denom(xi1);
    });
  };

  if (opts.parallel && tnodes.size() > 1) {
    parallel_for(tnodes.size(), [&](std::size_t idx) {
      auto cd = dispersion.clone();
      run_line(idx, *cd);
    });
  } else {
    for (std::size_t idx = 0; idx < tnodes.size(); ++idx) run_line(idx, dispersion);
  }

  cxd total{0.0, 0.0};
  for (std::size_t i = 0; i < tnodes.size(); ++i) total += tnodes[i].weight * line_values[i];
  return total * std::pow(kTwoPi, -d);
}

// ---------------------------------------------------------------------------
// Bloch-weighted integrals (reduced Green's function and J)
// ---------------------------------------------------------------------------

namespace {

struct BlochIntegralSetup {
  const PeriodicOperator* op;
  BandEdge edge;
  SupportPoint sp;
  double eta_radius;
  VectorXd x, y;
  int cutoff;
};

enum class BlochKind { ReducedGreen, RemainderJ };

cxd bloch_integral(const BlochIntegralSetup& setup, BlochKind kind,
                   const QuadOptions& opts) {
  const PeriodicOperator& op = *setup.op;
  const int d = op.dim();
  require(d >= 2, "bloch integrals: d >= 2");
  const RotatedFrame rot = rotated_frame(setup.sp);
  const double lambda_phys = setup.edge.to_physical(setup.sp.lambda);
  const VectorXd diff = setup.x - setup.y;
  const double r = diff.norm();
  const FourierIndexSet basis(d, setup.cutoff);
  const int n = basis.size();

  VectorXcd wave_x(n), wave_y(n);
  const VectorXd xf = fractional(setup.x);
  const VectorXd yf = fractional(setup.y);
  for (int i = 0; i < n; ++i) {
    const VectorXd mi = basis.index(i).cast<double>();
    wave_x[i] = std::polar(1.0, kTwoPi * mi.dot(xf));
    wave_y[i] = std::polar(1.0, kTwoPi * mi.dot(yf));
  }

  auto rho_of = [&](const TrackedPair& plus, const TrackedPair& minus) {
    const cxd phi_x = (wave_x.array() * plus.vector.array()).sum();
    const cxd phi_y = (wave_y.array() * minus.vector.array()).sum();
    const cxd pairing = minus.vector.dot(plus.vector);
    require(std::abs(pairing) > 1e-12, "bloch integral: pairing degenerates on a node");
    return phi_x * std::conj(phi_y) / pairing;
  };

  // rho at the expansion point k0 (J subtracts it)
  cxd rho0{0.0, 0.0};
  {
    TrackedComplexDispersion plus(op, setup.edge, setup.cutoff);
    TrackedComplexDispersion minus(op, setup.edge, setup.cutoff);
    VectorXcd kp = to_complex(setup.edge.k0), km = kp;
    for (int j = 0; j < d; ++j) {
      kp[j] += cxd(0.0, setup.sp.beta_s[j]);
      km[j] -= cxd(0.0, setup.sp.beta_s[j]);
    }
    rho0 = rho_of(plus.pair_at(kp), minus.pair_at(km));
  }

  const auto tnodes = transverse_nodes(d, setup.eta_radius, opts);
  std::vector<cxd> line_values(tnodes.size());

  auto run_line = [&](std::size_t idx) {
    TrackedComplexDispersion plus(op, setup.edge, setup.cutoff);
    TrackedComplexDispersion minus(op, setup.edge, setup.cutoff);
    const VectorXd& xp = tnodes[idx].xi_prime;

    auto node_value = [&](double xi1) {
      VectorXd xi(d);
      xi[0] = xi1;
      for (int j = 1; j < d; ++j) xi[j] = xp[j - 1];
      const double mu = bump_profile(xi.norm() / setup.eta_radius);
      if (mu == 0.0) return cxd(0.0, 0.0);
      const VectorXd dk = rot.rinv * xi;  // k - k0
      VectorXcd kp = to_complex(setup.edge.k0 + dk);
      VectorXcd km = kp;
      for (int j = 0; j < d; ++j) {
        kp[j] += cxd(0.0, setup.sp.beta_s[j]);
        km[j] -= cxd(0.0, setup.sp.beta_s[j]);
      }
      const TrackedPair pp = plus.pair_at(kp);
      const TrackedPair pm = minus.pair_at(km);
      const cxd denom = pp.value - lambda_phys;
      const cxd rho = rho_of(pp, pm);
      const double phase_local = dk.dot(diff);  // (k - k0).(x - y)
      if (kind == BlochKind::ReducedGreen) {
        const double phase = phase_local + setup.edge.k0.dot(diff);
        return mu * std::exp(cxd(0.0, phase)) * rho / denom;
      }
      return mu * std::exp(cxd(0.0, phase_local)) * (rho - rho0) / denom;
    };

    const double pole_distance =
        std::abs(cxd(plus.lambda_at([&] {
          VectorXd xi(d);
          xi[0] = 0.0;
          for (int j = 1; j < d; ++j) xi[j] = xp[j - 1];
          VectorXcd kp = to_complex(setup.edge.k0 + rot.rinv * xi);
          for (int j = 0; j < d; ++j) kp[j] += cxd(0.0, setup.sp.beta_s[j]);
          return kp;
        }()) - lambda_phys)) /
        std::max(setup.sp.grad_norm, 1e-12);
    const Segments segs = line_segments(setup.eta_radius, pole_distance, r, opts);
    line_values[idx] = integrate_segments(segs, node_value);
  };

  if (opts.parallel && tnodes.size() > 1) {
    parallel_for(tnodes.size(), [&](std::size_t idx) { run_line(idx); });
  } else {
    for (std::size_t idx = 0; idx < tnodes.size(); ++idx) run_line(idx);
  }

  cxd total{0.0, 0.0};
  for (std::size_t i = 0; i < tnodes.size(); ++i) total += tnodes[i].weight * line_values[i];
  return total * std::pow(kTwoPi, -d);
}

}  // namespace

cxd reduced_green_numeric(const PeriodicOperator& op, const BandEdge& edge,
                          const SupportPoint& sp, double eta_radius, const VectorXd& x,
                          const VectorXd& y, int cutoff, const QuadOptions& opts) {
  return bloch_integral({&op, edge, sp, eta_radius, x, y, cutoff},
                        BlochKind::ReducedGreen, opts);
}

cxd integral_J_numeric(const PeriodicOperator& op, const BandEdge& edge,
                       const SupportPoint& sp, double eta_radius, const VectorXd& x,
                       const VectorXd& y, int cutoff, const QuadOptions& opts) {
  return bloch_integral({&op, edge, sp, eta_radius, x, y, cutoff}, BlochKind::RemainderJ,
                        opts);
}

// ---------------------------------------------------------------------------
// Weierstrass branch
// ---------------------------------------------------------------------------

cxd weierstrass_branch(ComplexDispersion& dispersion, const BandEdge& edge,
                       const SupportPoint& sp, const VectorXcd& z_prime,
                       double newton_tol) {
  const int d = dispersion.dim();
  require(z_prime.size() == d - 1, "weierstrass_branch: z' must have d - 1 components");
  const RotatedFrame rot = rotated_frame(sp);
  const double lambda_phys = edge.to_physical(sp.lambda);
  const double sigma = edge.orientation;

  auto w_of = [&](cxd z1) {
    VectorXcd z(d);
    z[0] = z1;
    for (int j = 1; j < d; ++j) z[j] = z_prime[j - 1];
    // kappa = k0 + i beta_s - i Rinv z
    VectorXcd kappa = to_complex(edge.k0);
    const VectorXcd rz = rot.rinv.cast<cxd>() * z;
    for (int j = 0; j < d; ++j) kappa[j] += cxd(0.0, sp.beta_s[j]) - cxd(0.0, 1.0) * rz[j];
    return sigma * (dispersion.lambda_at(kappa) - lambda_phys);
  };

  const MatrixXd q = -(sp.frame.transpose() * sp.hess * sp.frame) / sp.grad_norm;
  cxd z1 = 0.5 * (z_prime.transpose() * q.cast<cxd>() * z_prime).value();
  const double scale = std::max(1.0, std::abs(lambda_phys));
  for (int it = 0; it < 60; ++it) {
    const cxd w = w_of(z1);
    if (std::abs(w) <= newton_tol * scale) return z1;
    const double h = 1e-6 * (1.0 + std::abs(z1));
    const cxd dw = (w_of(z1 + h) - w_of(z1 - h)) / (2.0 * h);
    require(std::abs(dw) > 1e-14, "weierstrass_branch: vanishing derivative");
    const cxd step = -w / dw;
    z1 += step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z1))) {
      if (std::abs(w_of(z1)) <= 1e3 * newton_tol * scale) return z1;
      break;
    }
  }
  throw NumericalError("weierstrass_branch: Newton did not converge");
}

WeierstrassCheck weierstrass_check(ComplexDispersion& dispersion, const BandEdge& edge,
                                   const SupportPoint& sp, double radius,
                                   int samples_per_axis) {
  const int d = dispersion.dim();
  require(d >= 2, "weierstrass_check: d >= 2");
  WeierstrassCheck chk;
  chk.s = sp.s;
  chk.q_s = -(sp.frame.transpose() * sp.hess * sp.frame) / sp.grad_norm;

  std::vector<VectorXcd> zs;
  for (int axis = 0; axis < d - 1; ++axis) {
    for (int k = 1; k <= samples_per_axis; ++k) {
      const double t = radius * k / samples_per_axis;
      VectorXcd z = VectorXcd::Zero(d - 1);
      z[axis] = t;
      zs.push_back(z);
      z[axis] = -t;
      zs.push_back(z);
    }
  }
  if (d >= 3) {
    VectorXcd z = VectorXcd::Constant(d - 1, radius / std::sqrt(2.0));
    zs.push_back(z);
  }

  double worst = 0.0;
  for (const auto& z : zs) {
    const cxd a = weierstrass_branch(dispersion, edge, sp, z);
    chk.samples.push_back({z, a});
    const cxd model = 0.5 * (z.transpose() * chk.q_s.cast<cxd>() * z).value();
    worst = std::max(worst, std::abs(a - model) / std::max(z.squaredNorm(), 1e-300));
  }
  chk.quadratic_residual = worst;
  return chk;
}

}  // namespace gapasym
