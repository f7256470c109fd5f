#include "gapasym/complex_dispersion.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "gapasym/kvdoc.hpp"

namespace gapasym {

cxd gauge_fix(VectorXcd& v) {
  const double norm = v.norm();
  require(norm > 0.0, "gauge_fix: zero vector");
  const double peak = v.cwiseAbs().maxCoeff();
  int lead = 0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= 0.5 * peak) {
      lead = i;
      break;
    }
  }
  const cxd factor = std::abs(v[lead]) / (v[lead] * norm);
  v *= factor;
  return factor;
}

DispersionTracker::DispersionTracker(const PeriodicOperator& op, const BandEdge& edge,
                                     int cutoff, TrackerOptions opts)
    : op_(&op), edge_(edge), basis_(op.dim(), cutoff), opts_(opts) {
  require(cutoff >= 1, "DispersionTracker: cutoff must be >= 1");
  // root anchor at the real edge quasimomentum
  const auto eig = hermitian_eigs(assemble_fiber(op, to_complex(edge_.k0), basis_).entries);
  const int j = edge_.band_index - 1;
  require(j >= 0 && j < basis_.size(), "DispersionTracker: band index out of range");
  Anchor a;
  a.kappa = to_complex(edge_.k0);
  a.value = cxd(eig.values[j], 0.0);
  a.vec = eig.vectors.col(j);
  anchors_.push_back(std::move(a));
}

const DispersionTracker::Anchor& DispersionTracker::nearest_anchor(
    const VectorXcd& kappa) const {
  double best = std::numeric_limits<double>::infinity();
  const Anchor* pick = &anchors_.front();
  for (const auto& a : anchors_) {
    const double d = (a.kappa - kappa).norm();
    if (d < best) {
      best = d;
      pick = &a;
    }
  }
  return *pick;
}

TrackedPair DispersionTracker::step_to(const VectorXcd& kappa, const Anchor& from,
                                       bool add_anchors) {
  VectorXcd pos = from.kappa;
  cxd value = from.value;
  VectorXcd vec = from.vec;

  double remaining = (kappa - pos).norm();
  double step = std::min(opts_.walk_step, remaining);
  int halvings = 0;
  TrackedPair pair;
  pair.value = value;
  pair.vector = vec;

  double since_anchor = 0.0;
  while (remaining > 0.0) {
    const double len = std::min(step, remaining);
    const VectorXcd target = pos + (kappa - pos) * (len / remaining);
    const MatrixXcd m = assemble_fiber(*op_, target, basis_).entries;
    TrackedPair cand = track_eigenpair(m, value, vec);
    const double overlap = std::abs(vec.normalized().dot(cand.vector));
    if (overlap < opts_.overlap_min) {
      if (++halvings > opts_.max_halvings) {
        std::ostringstream ss;
        ss << "branch continuation failed: eigenvector overlap " << overlap
           << " below " << opts_.overlap_min << " after " << opts_.max_halvings
           << " halvings (last good |kappa - k0| = " << (pos - to_complex(edge_.k0)).norm()
           << ")";
        throw NumericalError(ss.str());
      }
      step *= 0.5;
      continue;
    }
    // branch ambiguity: a second eigenvalue indistinguishably close with a
    // competitive overlap means the selection is not well defined
    if (cand.isolation < opts_.ambiguity_tol &&
        cand.second_overlap > 0.8 * overlap) {
      std::ostringstream ss;
      ss << "branch ambiguity: candidates " << format_g17(cand.value.real()) << "+"
         << format_g17(cand.value.imag()) << "i and "
         << format_g17(cand.second_value.real()) << "+"
         << format_g17(cand.second_value.imag()) << "i within "
         << format_g17(cand.isolation);
      throw NumericalError(ss.str());
    }
    pos = target;
    value = cand.value;
    vec = cand.vector;
    pair = std::move(cand);
    remaining = (kappa - pos).norm();
    since_anchor += len;
    if (add_anchors && since_anchor >= opts_.walk_step && remaining > 0.0) {
      anchors_.push_back(Anchor{pos, value, vec});
      since_anchor = 0.0;
    }
    if (halvings > 0) {
      step = std::min(step * 2.0, opts_.walk_step);
      --halvings;
    }
  }
  if (add_anchors) anchors_.push_back(Anchor{pos, value, vec});
  return pair;
}

TrackedPair DispersionTracker::pair_at_kappa(const VectorXcd& kappa) {
  const Anchor& from = nearest_anchor(kappa);
  if ((from.kappa - kappa).norm() == 0.0) {
    TrackedPair p;
    p.value = from.value;
    p.vector = from.vec;
    p.seed_overlap = 1.0;
    // refresh residual/isolation through one tracked solve
    const MatrixXcd m = assemble_fiber(*op_, kappa, basis_).entries;
    return track_eigenpair(m, p.value, p.vector);
  }
  const bool lay_anchors = (from.kappa - kappa).norm() > 1.5 * opts_.walk_step;
  return step_to(kappa, from, lay_anchors);
}

TrackedPair DispersionTracker::pair_at(const VectorXd& beta) {
  require(beta.size() == dim(), "dispersion: beta has wrong dimension");
  VectorXcd kappa(dim());
  for (int i = 0; i < dim(); ++i) kappa[i] = cxd(edge_.k0[i], beta[i]);
  return pair_at_kappa(kappa);
}

double DispersionTracker::energy(const VectorXd& beta) {
  const TrackedPair p = pair_at(beta);
  const double e = edge_.to_working(p.value.real());
  const double defect = std::abs(p.value.imag());
  require(defect <= opts_.tol_real * (1.0 + std::abs(e)),
          "reality defect " + format_g17(defect) +
              " exceeds tolerance: discretization too coarse or beta outside the "
              "continuation region");
  return e;
}

DispersionSample DispersionTracker::sample(const VectorXd& beta) {
  const int d = dim();
  DispersionSample s;
  s.beta = beta;
  const TrackedPair p = pair_at(beta);
  s.energy = edge_.to_working(p.value.real());
  s.reality_defect = std::abs(p.value.imag());
  require(s.reality_defect <= opts_.tol_real * (1.0 + std::abs(s.energy)),
          "reality defect " + format_g17(s.reality_defect) + " exceeds tolerance at |beta| = " +
              format_g17(beta.norm()));
  s.isolation_margin = p.isolation;
  s.eigvec = p.vector;
  gauge_fix(s.eigvec);

  const double h = opts_.fd_step;
  VectorXd ep(d), em(d);
  for (int a = 0; a < d; ++a) {
    VectorXd bp = beta, bm = beta;
    bp[a] += h;
    bm[a] -= h;
    ep[a] = energy(bp);
    em[a] = energy(bm);
  }
  s.grad.resize(d);
  for (int a = 0; a < d; ++a) s.grad[a] = (ep[a] - em[a]) / (2.0 * h);
  s.hessian.resize(d, d);
  for (int a = 0; a < d; ++a) s.hessian(a, a) = (ep[a] + em[a] - 2.0 * s.energy) / (h * h);
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      VectorXd bpp = beta, bpm = beta, bmp = beta, bmm = beta;
      bpp[a] += h; bpp[b] += h;
      bpm[a] += h; bpm[b] -= h;
      bmp[a] -= h; bmp[b] += h;
      bmm[a] -= h; bmm[b] -= h;
      const double v =
          (energy(bpp) - energy(bpm) - energy(bmp) + energy(bmm)) / (4.0 * h * h);
      s.hessian(a, b) = v;
      s.hessian(b, a) = v;
    }
  }
  return s;
}

DispersionSample dispersion_at(const PeriodicOperator& op, const BandEdge& edge,
                               const VectorXd& beta, int cutoff,
                               const TrackerOptions& opts) {
  DispersionTracker tracker(op, edge, cutoff, opts);
  return tracker.sample(beta);
}

namespace {

bool negative_definite(const MatrixXd& h, double slack = 0.0) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() < -slack;
}

}  // namespace

std::vector<DispersionSample> continue_ray(DispersionTracker& tracker,
                                           const VectorXd& unit_direction,
                                           const StepControl& control) {
  require(std::abs(unit_direction.norm() - 1.0) <= 1e-12,
          "continue_ray: direction must be a unit vector");
  std::vector<DispersionSample> out;
  out.push_back(tracker.sample(VectorXd::Zero(tracker.dim())));
  if (control.t_max <= 0.0) return out;

  double t = 0.0;
  double step = control.step_init;
  while (t < control.t_max) {
    const double tn = std::min(control.t_max, t + step);
    DispersionSample s = tracker.sample(tn * unit_direction);
    if (!negative_definite(s.hessian)) break;
    out.push_back(std::move(s));
    t = tn;
    step = std::min(control.step_max, step * 1.5);
  }
  return out;
}

double concavity_radius(const PeriodicOperator& op, const BandEdge& edge,
                        const std::vector<VectorXd>& directions, double t_max,
                        int cutoff, const TrackerOptions& opts) {
  require(!directions.empty(), "concavity_radius: need at least one direction");
  double radius = t_max;
  for (const auto& s : directions) {
    DispersionTracker tracker(op, edge, cutoff, opts);
    StepControl control;
    control.t_max = t_max;
    std::vector<DispersionSample> ray;
    try {
      ray = continue_ray(tracker, s.normalized(), control);
    } catch (const NumericalError&) {
      // continuation/reality failure caps the certified radius on this ray
    }
    const double reach = ray.empty() ? 0.0 : ray.back().beta.norm();
    radius = std::min(radius, reach);
  }
  require(radius > 0.0,
          "concavity radius is zero: dispersion assumptions violated at the edge");
  return radius;
}

BlochPair bloch_pair(DispersionTracker& tracker, const VectorXd& beta,
                     double tol_pairing) {
  BlochPair pair;
  pair.beta = beta;
  pair.basis = tracker.basis();
  const TrackedPair plus = tracker.pair_at(beta);
  const TrackedPair minus = tracker.pair_at(-beta);  // kappa = k0 - i beta
  pair.phi_plus = plus.vector;
  pair.phi_minus = minus.vector;
  gauge_fix(pair.phi_plus);
  gauge_fix(pair.phi_minus);
  // F = (phi_plus, phi_minus)_{L2(T)} = sum_m (phi_plus)_m conj((phi_minus)_m)
  pair.pairing = pair.phi_minus.dot(pair.phi_plus);
  require(std::abs(pair.pairing) >= tol_pairing,
          "Bloch pairing magnitude " + format_g17(std::abs(pair.pairing)) +
              " below tolerance: eigenfunction pairing degenerates");
  pair.conj_alignment = std::abs((pair.phi_plus.transpose() * pair.phi_minus).value());
  return pair;
}

std::pair<cxd, cxd> evaluate_bloch(const BlochPair& pair, const VectorXd& x) {
  const VectorXd xf = fractional(x);
  cxd plus{0.0, 0.0}, minus{0.0, 0.0};
  for (int i = 0; i < pair.basis.size(); ++i) {
    const double phase = kTwoPi * pair.basis.index(i).cast<double>().dot(xf);
    const cxd e = std::polar(1.0, phase);
    plus += pair.phi_plus[i] * e;
    minus += pair.phi_minus[i] * e;
  }
  return {plus, minus};
}

VectorXd TrackedDispersionField::gradient(const VectorXd& beta) {
  const int d = t_->dim();
  const double h = t_->options().fd_step;
  VectorXd g(d);
  for (int a = 0; a < d; ++a) {
    VectorXd bp = beta, bm = beta;
    bp[a] += h;
    bm[a] -= h;
    g[a] = (t_->energy(bp) - t_->energy(bm)) / (2.0 * h);
  }
  return g;
}

MatrixXd TrackedDispersionField::hessian(const VectorXd& beta) {
  return t_->sample(beta).hessian;
}

}  // namespace gapasym
