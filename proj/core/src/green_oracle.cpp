#include "gapasym/green_oracle.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gapasym/csv.hpp"
#include "gapasym/eigs.hpp"
#include "gapasym/kvdoc.hpp"
#include "gapasym/parallel.hpp"
#include "gapasym/special_functions.hpp"

namespace gapasym {

double free_reference(double lambda, double r, int d) {
  require(lambda < 0.0, "free_reference: lambda must be negative");
  require(r > 0.0, "free_reference: separation must be positive");
  const double q = std::sqrt(-lambda);
  switch (d) {
    case 1: return std::exp(-q * r) / (2.0 * q);
    case 2: return bessel_k0(q * r) / kTwoPi;
    case 3: return std::exp(-q * r) / (4.0 * kPi * r);
    default: throw NumericalError("free_reference: d must be 1, 2 or 3");
  }
}

namespace {

/// Anisotropic constant-coefficient reference kernel: Green's function of
/// D* B D + v_ref at lambda, via the isotropic one in B^{-1/2} coordinates.
double anisotropic_reference(const MatrixXd& b, double lambda_eff, const VectorXd& r,
                             int d) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(b);
  const VectorXd ev = es.eigenvalues();
  require(ev.minCoeff() > 0.0, "reference metric must be positive definite");
  const VectorXd rr = es.eigenvectors().transpose() * r;
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += rr[j] * rr[j] / ev[j];
  const double dist = std::sqrt(s);
  double det = 1.0;
  for (int j = 0; j < d; ++j) det *= ev[j];
  return free_reference(lambda_eff, dist, d) / std::sqrt(det);
}

struct PairData {
  VectorXd x, y, diff;
  VectorXcd wave_x;        // e^{2 pi i m . frac(x)}
  int y_group = 0;         // index of the distinct frac(y) right-hand side
  VectorXcd ref_phase;     // e^{2 pi i m . (frac(x) - frac(y))}
  double ref_closed = 0.0; // closed-form reference value
  cxd shift_prefactor{1.0, 0.0};
};

}  // namespace

std::vector<OracleSample> green_batch(const PeriodicOperator& op, double lambda,
                                      const std::vector<std::pair<VectorXd, VectorXd>>& pairs,
                                      const VectorXd& contour_shift, int cutoff, int m,
                                      const OracleOptions& opts) {
  require(!pairs.empty(), "green_batch: no evaluation points");
  require(cutoff >= 1, "green_batch: cutoff must be >= 1");
  const int d = op.dim();
  const FourierIndexSet basis(d, cutoff);
  const int n = basis.size();

  double max_r = 0.0;
  for (const auto& [x, y] : pairs) {
    require(x.size() == d && y.size() == d, "green_batch: point dimension mismatch");
    const double r = (x - y).norm();
    require(r >= opts.min_separation,
            "green_batch: |x - y| = " + format_g17(r) +
                " below the resolvable separation " + format_g17(opts.min_separation));
    max_r = std::max(max_r, r);
  }
  require(m >= 8 * static_cast<int>(std::ceil(max_r)),
          "green_batch: quadrature must satisfy M >= 8 * ceil(|x - y|) per axis");

  // reference split: constant-coefficient operator D* A0 D + v_ref whose
  // spectrum stays clear of lambda for this contour shift
  const MatrixXd a0 = op.mean_metric().real();
  const double v0 = op.mean_potential();
  const double shift_b = contour_shift.size()
                             ? std::sqrt(contour_shift.dot(a0 * contour_shift))
                             : 0.0;
  const double needed = std::max(1.0, 1.5 * shift_b);
  const double lambda_eff = std::min(lambda - v0, -needed * needed);
  const double v_ref = lambda - lambda_eff;

  // fiber spectrum of the true operator must avoid lambda on the real
  // contour; the caller guarantees this by choosing lambda in a gap, and
  // near-singular nodes are detected below

  std::vector<PairData> pd(pairs.size());
  std::map<std::vector<std::int64_t>, int> y_groups;
  std::vector<VectorXcd> rhs;  // conj wave at each distinct frac(y)
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto& e = pd[p];
    e.x = pairs[p].first;
    e.y = pairs[p].second;
    e.diff = e.x - e.y;
    const VectorXd xf = fractional(e.x);
    const VectorXd yf = fractional(e.y);
    e.wave_x.resize(n);
    e.ref_phase.resize(n);
    for (int i = 0; i < n; ++i) {
      const VectorXd mi = basis.index(i).cast<double>();
      e.wave_x[i] = std::polar(1.0, kTwoPi * mi.dot(xf));
      e.ref_phase[i] = std::polar(1.0, kTwoPi * mi.dot(xf - yf));
    }
    std::vector<std::int64_t> key(d);
    for (int j = 0; j < d; ++j) key[j] = std::llround(yf[j] * (1ll << 40));
    auto [it, inserted] = y_groups.emplace(key, static_cast<int>(rhs.size()));
    if (inserted) {
      VectorXcd w(n);
      for (int i = 0; i < n; ++i) {
        const VectorXd mi = basis.index(i).cast<double>();
        w[i] = std::polar(1.0, -kTwoPi * mi.dot(yf));
      }
      rhs.push_back(std::move(w));
    }
    e.y_group = it->second;
    if (opts.reference_correction)
      e.ref_closed = anisotropic_reference(a0, lambda_eff, e.diff, d);
    const double sdot = contour_shift.size() ? contour_shift.dot(e.diff) : 0.0;
    e.shift_prefactor = std::exp(-sdot);
  }

  const VectorXcd kshift = contour_shift.size()
                               ? complex_quasimomentum(VectorXd::Zero(d), contour_shift)
                               : VectorXcd::Zero(d);

  auto evaluate = [&](int mm, std::vector<cxd>& coarse, std::vector<cxd>& fine,
                      std::string& error) {
    // one pass over the (2 mm)^d grid; even-index nodes reproduce the mm grid
    const int full = 2 * mm;
    std::size_t nodes = 1;
    for (int j = 0; j < d; ++j) nodes *= static_cast<std::size_t>(full);
    const std::size_t npairs = pairs.size();

    const std::size_t block = std::max<std::size_t>(1, nodes / (64 * std::max(1, thread_count())));
    const std::size_t nblocks = (nodes + block - 1) / block;
    std::vector<std::vector<cxd>> bc(nblocks), bf(nblocks);
    std::vector<std::string> berr(nblocks);

    parallel_for(nblocks, [&](std::size_t b) {
      std::vector<cxd> acc_c(npairs, cxd(0, 0)), acc_f(npairs, cxd(0, 0));
      MatrixXcd fiber(n, n);
      VectorXcd u(n), refdiag(n);
      for (std::size_t node = b * block; node < std::min(nodes, (b + 1) * block); ++node) {
        // decode node -> k and coarse membership
        VectorXd k(d);
        bool on_coarse = true;
        std::size_t rem = node;
        for (int j = d - 1; j >= 0; --j) {
          const int idx = static_cast<int>(rem % full);
          rem /= full;
          k[j] = -kPi + kTwoPi * idx / full;
          if (idx % 2) on_coarse = false;
        }
        VectorXcd kc(d);
        for (int j = 0; j < d; ++j) kc[j] = cxd(k[j], 0.0) + kshift[j];

        fiber = assemble_fiber_matrix(op, kc, std::span<const VectorXi>(basis.indices()));
        for (int i = 0; i < n; ++i) fiber(i, i) -= lambda;
        Eigen::PartialPivLU<MatrixXcd> lu(fiber);

        for (int i = 0; i < n; ++i) {
          cxd q = 0.0;
          const VectorXi& mi = basis.index(i);
          VectorXcd mom(d);
          for (int j = 0; j < d; ++j) mom[j] = kTwoPi * mi[j] + kc[j];
          for (int p = 0; p < d; ++p)
            for (int q2 = 0; q2 < d; ++q2) q += mom[p] * a0(p, q2) * mom[q2];
          refdiag[i] = q + (v_ref - lambda);
        }

        std::vector<VectorXcd> solved(rhs.size());
        for (std::size_t g = 0; g < rhs.size(); ++g) {
          solved[g] = lu.solve(rhs[g]);
          if (!solved[g].allFinite() || solved[g].norm() > 1e14 * std::sqrt(double(n))) {
            std::ostringstream ss;
            ss << "near-singular fiber at node k = (" << k.transpose()
               << "): distance of lambda to the fiber spectrum ~ "
               << format_g17(rhs[g].norm() / std::max(solved[g].norm(), 1e-300));
            berr[b] = ss.str();
            return;
          }
        }
        for (std::size_t p = 0; p < npairs; ++p) {
          const auto& e = pd[p];
          const cxd osc = std::exp(cxd(0.0, k.dot(e.diff)));
          cxd term = e.wave_x.transpose() * solved[e.y_group];
          if (opts.reference_correction) {
            cxd ref = 0.0;
            for (int i = 0; i < n; ++i) ref += e.ref_phase[i] / refdiag[i];
            term -= ref;
          }
          const cxd v = osc * term;
          acc_f[p] += v;
          if (on_coarse) acc_c[p] += v;
        }
      }
      bc[b] = std::move(acc_c);
      bf[b] = std::move(acc_f);
    });

    coarse.assign(npairs, cxd(0, 0));
    fine.assign(npairs, cxd(0, 0));
    for (std::size_t b = 0; b < nblocks; ++b) {
      if (!berr[b].empty()) {
        error = berr[b];
        return;
      }
      for (std::size_t p = 0; p < npairs; ++p) {
        coarse[p] += bc[b][p];
        fine[p] += bf[b][p];
      }
    }
    double norm_c = 1.0, norm_f = 1.0;
    for (int j = 0; j < d; ++j) {
      norm_c /= mm;
      norm_f /= full;
    }
    for (std::size_t p = 0; p < npairs; ++p) {
      coarse[p] *= norm_c;
      fine[p] *= norm_f;
    }
  };

  std::vector<OracleSample> out(pairs.size());
  int mm = m % 2 ? m + 1 : m;
  for (int attempt = 0;; ++attempt) {
    std::vector<cxd> coarse, fine;
    std::string error;
    evaluate(mm, coarse, fine, error);
    if (!error.empty()) throw NumericalError(error);

    bool all_ok = true;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto& s = out[p];
      const auto& e = pd[p];
      const cxd vc = e.shift_prefactor * coarse[p] + e.ref_closed;
      const cxd vf = e.shift_prefactor * fine[p] + e.ref_closed;
      s.x = e.x;
      s.y = e.y;
      s.lambda = lambda;
      s.grid = mm;
      s.contour_shift = contour_shift.size() ? contour_shift : VectorXd::Zero(d);
      s.value = vf;
      const double scale = std::max(std::abs(vf), 1e-300);
      s.doubling_defect = std::abs(vc - vf) / scale;
      s.converged = s.doubling_defect <= opts.tol_quad;
      if (!s.converged) all_ok = false;
    }
    if (all_ok || attempt >= opts.max_doublings) break;
    mm *= 2;
  }
  for (const auto& s : out) {
    if (!s.converged)
      throw NumericalError("green quadrature did not converge at M = " +
                           std::to_string(s.grid) +
                           " (defect " + format_g17(s.doubling_defect) + ")");
  }
  return out;
}

OracleSample green_bz_integral(const PeriodicOperator& op, double lambda,
                               const VectorXd& x, const VectorXd& y, int cutoff, int m,
                               const OracleOptions& opts) {
  return green_batch(op, lambda, {{x, y}}, VectorXd(), cutoff, m, opts)[0];
}

OracleSample green_shifted_contour(const PeriodicOperator& op, double lambda,
                                   const VectorXd& beta_s, double t, const VectorXd& x,
                                   const VectorXd& y, int cutoff, int m,
                                   const OracleOptions& opts) {
  require(t >= 0.0 && t < 1.0,
          "green_shifted_contour: t must lie in [0, 1); the integrand is singular at t = 1");
  const VectorXd shift = t * beta_s;
  return green_batch(op, lambda, {{x, y}}, shift, cutoff, m, opts)[0];
}

FiberDistanceScan fiber_spectral_distance_scan(const PeriodicOperator& op, double lambda,
                                               const VectorXd& beta_s, double t,
                                               int grid_resolution, int cutoff) {
  const int d = op.dim();
  const FourierIndexSet basis(d, cutoff);
  FiberDistanceScan scan;
  std::size_t nodes = 1;
  for (int j = 0; j < d; ++j) nodes *= static_cast<std::size_t>(grid_resolution);
  scan.nodes.resize(nodes);
  scan.distances.resize(static_cast<Eigen::Index>(nodes));
  parallel_for(nodes, [&](std::size_t i) {
    VectorXd k(d);
    std::size_t rem = i;
    for (int j = d - 1; j >= 0; --j) {
      k[j] = -kPi + kTwoPi * static_cast<double>(rem % grid_resolution) / grid_resolution;
      rem /= grid_resolution;
    }
    scan.nodes[i] = k;
    const VectorXcd kc = complex_quasimomentum(k, t * beta_s);
    const auto eig = complex_eigs(assemble_fiber(op, kc, basis).entries);
    double dist = std::numeric_limits<double>::infinity();
    for (int e = 0; e < eig.values.size(); ++e)
      dist = std::min(dist, std::abs(eig.values[e] - lambda));
    scan.distances[static_cast<Eigen::Index>(i)] = dist;
  });
  scan.distances.minCoeff(&scan.argmin);
  return scan;
}

std::string oracle_samples_csv(const std::vector<OracleSample>& samples) {
  require(!samples.empty(), "oracle_samples_csv: empty sample list");
  const int d = static_cast<int>(samples.front().x.size());
  std::vector<std::string> header;
  for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < d; ++j) header.push_back("y" + std::to_string(j + 1));
  header.insert(header.end(), {"lambda", "re_value", "im_value", "grid", "shift_norm",
                               "converged", "doubling_defect"});
  CsvWriter csv(header);
  for (const auto& s : samples) {
    for (int j = 0; j < d; ++j) csv.cell(s.x[j]);
    for (int j = 0; j < d; ++j) csv.cell(s.y[j]);
    csv.cell(s.lambda)
        .cell(s.value.real())
        .cell(s.value.imag())
        .cell(s.grid)
        .cell(s.contour_shift.size() ? s.contour_shift.norm() : 0.0)
        .cell(s.converged ? 1 : 0)
        .cell(s.doubling_defect);
    csv.end_row();
  }
  return csv.str();
}

}  // namespace gapasym
