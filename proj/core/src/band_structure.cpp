#include "gapasym/band_structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gapasym/csv.hpp"
#include "gapasym/eigs.hpp"
#include "gapasym/kvdoc.hpp"
#include "gapasym/parallel.hpp"

namespace gapasym {

namespace {

/// d/dk_r of the fiber matrix at real k: A_n (2 pi m' + k) row contribution
/// plus the transposed-side term.
MatrixXcd fiber_derivative(const PeriodicOperator& op, const VectorXd& k,
                           const FourierIndexSet& basis, int axis) {
  const int n = basis.size();
  const int d = op.dim();
  MatrixXcd dm = MatrixXcd::Zero(n, n);
  std::vector<VectorXd> mom(n);
  for (int i = 0; i < n; ++i) {
    VectorXd p(d);
    for (int j = 0; j < d; ++j) p[j] = kTwoPi * basis.index(i)[j] + k[j];
    mom[i] = p;
  }
  for (const auto& mc : op.metric_coeffs()) {
    for (int col = 0; col < n; ++col) {
      VectorXi row_idx = basis.index(col) + mc.n;
      const int row = basis.flat(row_idx);
      if (row < 0) continue;
      cxd v = 0.0;
      for (int q = 0; q < d; ++q) v += mc.a(axis, q) * mom[col][q];
      for (int p = 0; p < d; ++p) v += mom[row][p] * mc.a(p, axis);
      dm(row, col) += v;
    }
  }
  return dm;
}

int band_count_floor(int n_bands) { return std::max(1, n_bands); }

}  // namespace

int BandGrid::negated_node(int flat) const {
  int out = 0;
  int rem = flat;
  std::vector<int> digits(dim);
  for (int j = dim - 1; j >= 0; --j) {
    digits[j] = rem % resolution;
    rem /= resolution;
  }
  for (int j = 0; j < dim; ++j) {
    const int neg = (resolution - digits[j]) % resolution;
    out = out * resolution + neg;
  }
  return out;
}

BandGrid compute_bands(const PeriodicOperator& op, int resolution, int n_bands,
                       int cutoff) {
  require(resolution >= 3, "compute_bands: grid resolution must be >= 3 per axis");
  require(cutoff >= 1, "compute_bands: cutoff must be >= 1");
  const int d = op.dim();
  BandGrid g;
  g.dim = d;
  g.resolution = resolution;
  g.n_bands = band_count_floor(n_bands);
  g.cutoff = cutoff;
  int npts = 1;
  for (int j = 0; j < d; ++j) npts *= resolution;
  g.nodes.resize(npts);
  for (int i = 0; i < npts; ++i) {
    VectorXd k(d);
    int rem = i;
    for (int j = d - 1; j >= 0; --j) {
      k[j] = -kPi + kTwoPi * (rem % resolution) / resolution;
      rem /= resolution;
    }
    g.nodes[i] = k;
  }
  const FourierIndexSet basis(d, cutoff);
  require(basis.size() >= g.n_bands,
          "compute_bands: cutoff too small for requested band count");
  g.values.resize(npts, g.n_bands);
  std::vector<std::string> errors(npts);
  parallel_for(npts, [&](std::size_t i) {
    try {
      const VectorXd evs =
          hermitian_eigenvalues(assemble_fiber(op, to_complex(g.nodes[i]), basis).entries);
      for (int b = 0; b < g.n_bands; ++b) g.values(static_cast<int>(i), b) = evs[b];
    } catch (const std::exception& e) {
      std::ostringstream ss;
      ss << "eigensolve failed at k = (" << g.nodes[i].transpose() << "): " << e.what();
      errors[i] = ss.str();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError(e);
  return g;
}

double evenness_defect(const BandGrid& bands) {
  double worst = 0.0;
  for (int i = 0; i < bands.node_count(); ++i) {
    const int j = bands.negated_node(i);
    worst = std::max(worst, (bands.values.row(i) - bands.values.row(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<SpectralGap> find_gaps(const BandGrid& bands) {
  std::vector<SpectralGap> gaps;
  for (int b = 0; b + 1 < bands.n_bands; ++b) {
    const double top = bands.values.col(b).maxCoeff();
    const double bottom = bands.values.col(b + 1).minCoeff();
    if (bottom > top) {
      gaps.push_back(SpectralGap{b + 1, top, bottom, true});
    }
  }
  return gaps;
}

SpectralGap bottom_gap(const BandGrid& bands) {
  return SpectralGap{0, -std::numeric_limits<double>::infinity(),
                     bands.values.col(0).minCoeff(), true};
}

VectorXd band_gradient(const PeriodicOperator& op, const VectorXd& k, int band_index,
                       const FourierIndexSet& basis) {
  const auto eig = hermitian_eigs(assemble_fiber(op, to_complex(k), basis).entries);
  const VectorXcd v = eig.vectors.col(band_index - 1);
  VectorXd grad(op.dim());
  for (int r = 0; r < op.dim(); ++r) {
    const MatrixXcd dm = fiber_derivative(op, k, basis, r);
    grad[r] = std::real(v.dot(dm * v));
  }
  return grad;
}

MatrixXd band_hessian(const PeriodicOperator& op, const VectorXd& k, int band_index,
                      const FourierIndexSet& basis, double step) {
  const int d = op.dim();
  auto fd = [&](double h) {
    MatrixXd m(d, d);
    for (int a = 0; a < d; ++a) {
      VectorXd kp = k, km = k;
      kp[a] += h;
      km[a] -= h;
      const VectorXd gp = band_gradient(op, kp, band_index, basis);
      const VectorXd gm = band_gradient(op, km, band_index, basis);
      m.col(a) = (gp - gm) / (2.0 * h);
    }
    return MatrixXd(0.5 * (m + m.transpose()));
  };
  const MatrixXd h1 = fd(step);
  const MatrixXd h2 = fd(0.5 * step);
  return (4.0 * h2 - h1) / 3.0;  // one Richardson halving
}

MatrixXd band_hessian_perturbative(const PeriodicOperator& op, const VectorXd& k,
                                   int band_index, const FourierIndexSet& basis) {
  const int d = op.dim();
  const int j = band_index - 1;
  const auto eig = hermitian_eigs(assemble_fiber(op, to_complex(k), basis).entries);
  const VectorXcd v = eig.vectors.col(j);
  std::vector<VectorXcd> dmv(d);
  for (int r = 0; r < d; ++r) dmv[r] = fiber_derivative(op, k, basis, r) * v;

  MatrixXd h(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) {
      // d2 M / dk_r dk_c = A^{rc}_{m-m'} + A^{cr}_{m-m'}; contract directly
      cxd second = 0.0;
      for (const auto& mc : op.metric_coeffs()) {
        cxd acc = 0.0;
        for (int col = 0; col < basis.size(); ++col) {
          VectorXi row_idx = basis.index(col) + mc.n;
          const int row = basis.flat(row_idx);
          if (row < 0) continue;
          acc += std::conj(v[row]) * (mc.a(r, c) + mc.a(c, r)) * v[col];
        }
        second += acc;
      }
      double sum = std::real(second);
      for (int i = 0; i < basis.size(); ++i) {
        if (i == j) continue;
        const double denom = eig.values[j] - eig.values[i];
        const cxd a = eig.vectors.col(i).dot(dmv[r]);
        const cxd b = eig.vectors.col(i).dot(dmv[c]);
        sum += 2.0 * std::real(std::conj(a) * b) / denom;
      }
      h(r, c) = sum;
      h(c, r) = sum;
    }
  }
  return h;
}

namespace {

double band_value(const PeriodicOperator& op, const VectorXd& k, int band_index,
                  const FourierIndexSet& basis) {
  return hermitian_eigenvalues(assemble_fiber(op, to_complex(k), basis).entries)[band_index - 1];
}

VectorXd wrap_k(const VectorXd& k) {
  VectorXd w(k.size());
  for (Eigen::Index j = 0; j < k.size(); ++j) w[j] = wrap_pi(k[j]);
  return w;
}

double torus_distance(const VectorXd& a, const VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = wrap_pi(a[j] - b[j]);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

BandEdge locate_edge(const PeriodicOperator& op, const BandGrid& bands,
                     const SpectralGap& gap, GapSide side, int cutoff,
                     const EdgeLocateOptions& opts) {
  require(!(gap.is_bottom() && side == GapSide::Lower),
          "the semi-infinite bottom gap has no lower-side band");
  const int j = side == GapSide::Lower ? gap.below_band : gap.below_band + 1;
  require(j >= 1 && j <= bands.n_bands, "locate_edge: band index outside computed grid");
  const int orientation = side == GapSide::Lower ? -1 : +1;
  const FourierIndexSet basis(op.dim(), cutoff);

  // working objective W(k) = orientation * lambda_j(k); the edge minimizes it
  auto wval = [&](const VectorXd& k) { return orientation * band_value(op, k, j, basis); };
  auto wgrad = [&](const VectorXd& k) {
    return VectorXd(orientation * band_gradient(op, k, j, basis));
  };

  // multi-start from the most extremal grid nodes, deduplicated on the torus
  std::vector<int> order(bands.node_count());
  for (int i = 0; i < bands.node_count(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return orientation * bands.values(a, j - 1) < orientation * bands.values(b, j - 1);
  });
  const double cell = kTwoPi / bands.resolution;
  std::vector<VectorXd> starts;
  for (int i : order) {
    if (static_cast<int>(starts.size()) >= opts.multistart) break;
    bool close = false;
    for (const auto& s : starts)
      if (torus_distance(s, bands.nodes[i]) < 2.5 * cell) close = true;
    if (!close) starts.push_back(bands.nodes[i]);
  }

  VectorXd best_k;
  double best_val = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (const auto& start : starts) {
    VectorXd k = start;
    bool ok = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const VectorXd g = wgrad(k);
      if (g.norm() <= opts.grad_tol) {
        ok = true;
        break;
      }
      MatrixXd h = band_hessian(op, k, j, basis, opts.fd_step);
      h *= orientation;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
      VectorXd step;
      if (es.eigenvalues().minCoeff() > 1e-10) {
        step = -h.ldlt().solve(g);
      } else {
        // fall back to steepest descent when the local model is indefinite
        step = -g * (cell / std::max(g.norm(), 1e-30));
      }
      const double max_step = cell;
      if (step.norm() > max_step) step *= max_step / step.norm();
      // backtracking on the working value
      const double f0 = wval(k);
      double t = 1.0;
      VectorXd kn = k + step;
      for (int bt = 0; bt < 30; ++bt) {
        if (wval(kn) <= f0 + 1e-14 * (1.0 + std::abs(f0))) break;
        t *= 0.5;
        kn = k + t * step;
      }
      if ((kn - k).norm() < 1e-13) {
        ok = g.norm() <= 1e3 * opts.grad_tol;  // gradient-noise floor
        k = kn;
        break;
      }
      k = kn;
    }
    if (!ok) continue;
    const double v = wval(k);
    if (v < best_val) {
      best_val = v;
      best_k = wrap_k(k);
      converged = true;
    }
  }
  require(converged, "locate_edge: refinement did not converge from any start node");

  BandEdge edge;
  edge.band_index = j;
  edge.k0 = best_k;
  edge.orientation = orientation;
  edge.edge_energy = band_value(op, best_k, j, basis);
  edge.shift_applied = -edge.edge_energy;
  edge.hessian = orientation * band_hessian(op, best_k, j, basis, opts.fd_step);
  edge.cutoff = cutoff;
  edge.gap_width = gap.is_bottom() ? std::numeric_limits<double>::infinity() : gap.width();

  // P3 isolation radius: half the distance from the edge energy to the
  // nearest other band on the grid
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < bands.node_count(); ++i)
    for (int b = 0; b < bands.n_bands; ++b)
      if (b != j - 1)
        margin = std::min(margin, std::abs(bands.values(i, b) - edge.edge_energy));
  edge.epsilon0 = 0.5 * margin;
  return edge;
}

AssumptionReport check_assumptions(const PeriodicOperator& op, BandEdge& edge,
                                   const BandGrid& bands,
                                   const AssumptionTolerances& tol) {
  AssumptionReport rep;
  const int j = edge.band_index;
  const FourierIndexSet basis(op.dim(), edge.cutoff);

  {
    const double defect =
        std::abs(band_value(op, edge.k0, j, basis) - edge.edge_energy);
    const double lim = tol.tol_edge * (1.0 + std::abs(edge.edge_energy));
    rep.a1 = {defect <= lim, lim - defect,
              "edge value defect " + format_g17(defect)};
  }
  {
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < bands.node_count(); ++i)
      for (int b = 0; b < bands.n_bands; ++b)
        if (b != j - 1)
          margin = std::min(margin, std::abs(bands.values(i, b) - edge.edge_energy));
    rep.a2 = {margin > 0.0, margin,
              "min |lambda_i - edge| over grid, i != j: " + format_g17(margin)};
  }
  {
    // energy window around the edge must localize near k0 modulo 2 pi Z^d
    const double bw =
        bands.values.col(j - 1).maxCoeff() - bands.values.col(j - 1).minCoeff();
    const double window = tol.tol_cluster * std::max(bw, 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(edge.hessian);
    const double hmin = std::max(es.eigenvalues().minCoeff(), 1e-12);
    const double cell = kTwoPi / bands.resolution;
    const double radius =
        std::max(2.0 * cell, 1.5 * std::sqrt(2.0 * window / hmin));
    double worst = 0.0;
    int offenders = 0;
    for (int i = 0; i < bands.node_count(); ++i) {
      if (std::abs(bands.values(i, j - 1) - edge.edge_energy) > window) continue;
      const double dist = torus_distance(bands.nodes[i], edge.k0);
      if (dist > radius) {
        ++offenders;
        worst = std::max(worst, dist);
      }
    }
    rep.a3 = {offenders == 0, radius - worst,
              offenders == 0
                  ? "all near-edge nodes within " + format_g17(radius) + " of k0"
                  : std::to_string(offenders) + " near-edge nodes away from k0 (max dist " +
                        format_g17(worst) + ")"};
  }
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(edge.hessian);
    const double hmin = es.eigenvalues().minCoeff();
    const double lim = tol.tol_pd * (1.0 + edge.hessian.norm());
    rep.a4 = {hmin >= lim, hmin - lim, "min eigenvalue of H: " + format_g17(hmin)};
  }
  {
    double worst = 0.0;
    for (int c = 0; c < op.dim(); ++c) {
      const double kc = std::abs(wrap_pi(edge.k0[c]));
      worst = std::max(worst, std::min(kc, kPi - kc));
    }
    rep.a5 = {worst <= tol.tol_sym, tol.tol_sym - worst,
              "max component distance to {0, pi}: " + format_g17(worst)};
  }
  rep.overall = rep.a1.pass && rep.a2.pass && rep.a3.pass && rep.a4.pass && rep.a5.pass;
  edge.report = rep;
  return rep;
}

int auto_cutoff(const PeriodicOperator& op, int n_bands, double tol) {
  const int d = op.dim();
  const int cap = d == 1 ? 64 : (d == 2 ? 8 : 2);
  std::vector<VectorXd> probes;
  probes.push_back(VectorXd::Zero(d));
  probes.push_back(VectorXd::Constant(d, kPi));
  probes.push_back(VectorXd::Constant(d, 0.5 * kPi));
  if (d >= 2) {
    VectorXd k = VectorXd::Zero(d);
    k[0] = kPi;
    probes.push_back(k);
  }

  int n = std::max(op.coefficient_reach(), d == 1 ? 2 : 1);
  auto probe_values = [&](int cutoff) {
    const FourierIndexSet basis(d, cutoff);
    VectorXd out(static_cast<int>(probes.size()) * n_bands);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const VectorXd evs =
          hermitian_eigenvalues(assemble_fiber(op, to_complex(probes[p]), basis).entries);
      for (int b = 0; b < n_bands; ++b)
        out[static_cast<int>(p) * n_bands + b] = evs[b];
    }
    return out;
  };

  while ((2 * n + 1) < std::max(n_bands, 3)) ++n;  // enough rows for the bands
  VectorXd prev = probe_values(n);
  while (n < cap) {
    VectorXd cur = probe_values(n + 1);
    const double move = (cur - prev).cwiseAbs().maxCoeff();
    if (move < tol * (1.0 + cur.cwiseAbs().maxCoeff())) break;
    prev = cur;
    ++n;
  }
  return n;
}

std::string band_grid_csv(const BandGrid& bands) {
  std::vector<std::string> header;
  for (int j = 0; j < bands.dim; ++j) header.push_back("k" + std::to_string(j + 1));
  for (int b = 0; b < bands.n_bands; ++b) header.push_back("lambda" + std::to_string(b + 1));
  CsvWriter csv(header);
  for (int i = 0; i < bands.node_count(); ++i) {
    for (int j = 0; j < bands.dim; ++j) csv.cell(bands.nodes[i][j]);
    for (int b = 0; b < bands.n_bands; ++b) csv.cell(bands.values(i, b));
    csv.end_row();
  }
  return csv.str();
}

std::string band_grid_serialize(const BandGrid& bands) {
  std::string out = "bandgrid v1\n";
  out += std::to_string(bands.dim) + " " + std::to_string(bands.resolution) + " " +
         std::to_string(bands.n_bands) + " " + std::to_string(bands.cutoff) + "\n";
  for (int i = 0; i < bands.node_count(); ++i) {
    for (int b = 0; b < bands.n_bands; ++b) {
      if (b) out += ' ';
      out += format_g17(bands.values(i, b));
    }
    out += '\n';
  }
  return out;
}

std::optional<BandGrid> band_grid_deserialize(const std::string& payload) {
  std::istringstream in(payload);
  std::string tag, version;
  in >> tag >> version;
  if (tag != "bandgrid" || version != "v1") return std::nullopt;
  BandGrid g;
  in >> g.dim >> g.resolution >> g.n_bands >> g.cutoff;
  if (!in || g.dim < 1 || g.dim > 3 || g.resolution < 3) return std::nullopt;
  int npts = 1;
  for (int j = 0; j < g.dim; ++j) npts *= g.resolution;
  g.nodes.resize(npts);
  for (int i = 0; i < npts; ++i) {
    VectorXd k(g.dim);
    int rem = i;
    for (int j = g.dim - 1; j >= 0; --j) {
      k[j] = -kPi + kTwoPi * (rem % g.resolution) / g.resolution;
      rem /= g.resolution;
    }
    g.nodes[i] = k;
  }
  g.values.resize(npts, g.n_bands);
  for (int i = 0; i < npts; ++i)
    for (int b = 0; b < g.n_bands; ++b)
      if (!(in >> g.values(i, b))) return std::nullopt;
  return g;
}

}  // namespace gapasym
