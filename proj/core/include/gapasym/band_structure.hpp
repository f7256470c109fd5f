#pragma once

#include "gapasym/common.hpp"
#include "gapasym/fiber_matrix.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gapasym {

/// Sorted band values on a uniform tensor grid over [-pi, pi)^d
/// (nodes -pi + 2 pi j / resolution; even resolutions contain 0 and the
/// high-symmetry points).
struct BandGrid {
  int dim = 0;
  int resolution = 0;
  int n_bands = 0;
  int cutoff = 0;
  std::vector<VectorXd> nodes;  // resolution^d, row-major, first axis slowest
  MatrixXd values;              // nodes x n_bands, each row ascending

  int node_count() const { return static_cast<int>(nodes.size()); }
  /// Flat index of the grid point -k (exact on this grid).
  int negated_node(int flat) const;
};

BandGrid compute_bands(const PeriodicOperator& op, int resolution, int n_bands, int cutoff);

/// max over grid and bands of |lambda_i(k) - lambda_i(-k)|.
double evenness_defect(const BandGrid& bands);

struct SpectralGap {
  int below_band = 0;   // j: gap lies between band j and j+1; 0 marks the
                        // semi-infinite gap below the spectrum
  double lower = 0.0;   // max of band j over the grid (-inf for the bottom gap)
  double upper = 0.0;   // min of band j+1 over the grid
  bool certified_on_grid = false;

  double width() const { return upper - lower; }
  bool is_bottom() const { return below_band == 0; }
};

/// Finite gaps between consecutive stored bands (maximal positive intervals).
std::vector<SpectralGap> find_gaps(const BandGrid& bands);
/// The semi-infinite gap below the bottom of the spectrum.
SpectralGap bottom_gap(const BandGrid& bands);

enum class GapSide { Lower, Upper };

struct AssumptionCheck {
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

struct AssumptionReport {
  AssumptionCheck a1, a2, a3, a4, a5;
  bool overall = false;
};

struct AssumptionTolerances {
  double tol_edge = 1e-8;     // A1: |lambda_j(k0) - edge| / (1 + |edge|)
  double tol_cluster = 1e-2;  // A3: energy window as a fraction of band width
  double tol_pd = 1e-8;       // A4: min eigenvalue of H relative to ||H||
  double tol_sym = 1e-6;      // A5: distance of k0 components to {0, pi}
};

/// Gap-edge record. `hessian` is the positive-definite working Hessian
/// H = orientation * Hess(lambda_j)(k0); working-frame energies are
/// E_work = orientation * (lambda - edge_energy), so the edge sits at 0 and
/// the gap occupies (-gap_width, 0).
struct BandEdge {
  int band_index = 0;  // 1-based index of the tracked band
  VectorXd k0;
  double edge_energy = 0.0;
  MatrixXd hessian;
  double shift_applied = 0.0;  // -edge_energy
  double epsilon0 = 0.0;       // isolation radius estimate (half the A2 margin)
  int orientation = +1;        // +1: band minimum; -1: band maximum
  double gap_width = 0.0;      // working-frame gap width (inf for bottom gap)
  int cutoff = 0;
  AssumptionReport report;

  /// physical fiber eigenvalue -> working-frame energy
  double to_working(double lambda_phys) const {
    return orientation * (lambda_phys - edge_energy);
  }
  double to_physical(double lambda_work) const {
    return edge_energy + orientation * lambda_work;
  }
};

struct EdgeLocateOptions {
  int max_iterations = 60;
  double grad_tol = 1e-11;
  double fd_step = 1e-3;  // Hessian step (one Richardson halving is applied)
  int multistart = 3;
};

/// Refine the extremum of the adjacent band from the best grid nodes.
/// side = Lower refines the maximum of band `gap.below_band`; Upper refines
/// the minimum of band `gap.below_band + 1`. An indefinite Hessian is
/// reported through the embedded AssumptionReport, not thrown.
BandEdge locate_edge(const PeriodicOperator& op, const BandGrid& bands,
                     const SpectralGap& gap, GapSide side, int cutoff,
                     const EdgeLocateOptions& opts = {});

AssumptionReport check_assumptions(const PeriodicOperator& op, BandEdge& edge,
                                   const BandGrid& bands,
                                   const AssumptionTolerances& tol = {});

/// lambda_j gradient via first-order perturbation theory (exact in the
/// discretized operator, no finite-difference step).
VectorXd band_gradient(const PeriodicOperator& op, const VectorXd& k, int band_index,
                       const FourierIndexSet& basis);

/// Hessian of lambda_j by Richardson-extrapolated central differences of the
/// perturbative gradient.
MatrixXd band_hessian(const PeriodicOperator& op, const VectorXd& k, int band_index,
                      const FourierIndexSet& basis, double step);

/// Hessian by full second-order perturbation theory (sum over states);
/// independent cross-check of band_hessian.
MatrixXd band_hessian_perturbative(const PeriodicOperator& op, const VectorXd& k,
                                   int band_index, const FourierIndexSet& basis);

/// Smallest cutoff at which the lowest n_bands eigenvalues at a fixed probe
/// set move by less than tol between successive cutoffs.
int auto_cutoff(const PeriodicOperator& op, int n_bands, double tol = 1e-9);

/// CSV export with columns k1..kd, lambda1..lambdan.
std::string band_grid_csv(const BandGrid& bands);
/// Cache payload (exact round-trip).
std::string band_grid_serialize(const BandGrid& bands);
std::optional<BandGrid> band_grid_deserialize(const std::string& payload);

}  // namespace gapasym
