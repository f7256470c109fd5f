#pragma once

#include "gapasym/asymptotics.hpp"
#include "gapasym/config.hpp"
#include "gapasym/green_oracle.hpp"

#include <string>
#include <vector>

namespace gapasym {

struct SweepRow {
  double r = 0.0;
  cxd oracle{};
  cxd lead{};
  double abs_ratio = 0.0;
  double phase_diff = 0.0;
  cxd remainder{};  // oracle - lead (exponential stripping happens downstream)
  double contour_t = 0.0;
  int grid = 0;
  bool converged = false;
};

struct RaySweepTable {
  VectorXd s;
  double lambda = 0.0;  // working-frame level
  double h = 0.0;       // support value <s, beta_s>
  std::vector<SweepRow> rows;  // sorted by increasing r
};

struct SweepOptions {
  double contour_t = -1.0;  // -1: 1 - 4/(h r_max), clamped to [0, 0.9]
  int oracle_m = 0;         // 0: 8 * ceil(max r)
  OracleOptions oracle;
};

/// Oracle vs leading-term rows along x = r s, y = 0. One shared
/// Brillouin-zone pass serves every radius.
RaySweepTable ray_sweep(const PeriodicOperator& op, const BandEdge& edge, int cutoff,
                        const SupportPoint& sp, const BlochPair& pair,
                        const std::vector<double>& r_list,
                        const SweepOptions& opts = {});

struct FitResult {
  double exp_rate = 0.0;      // a in log|G| ~ -a r - b log r + c
  double alg_exponent = 0.0;  // b
  double intercept = 0.0;     // c
  double r_squared = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
};

/// Least squares of log|G| against (r, log r, 1) over the top part of the
/// radius range (pre-asymptotic rows excluded).
FitResult fit_decay(const RaySweepTable& table, double window_fraction = 2.0 / 3.0);
FitResult fit_decay_points(const std::vector<std::pair<double, double>>& r_absg,
                           double window_fraction = 2.0 / 3.0);

/// (r, |oracle - lead| e^{h r} r^{d/2 - epsilon}) per row: bounded and
/// eventually non-increasing when the remainder obeys the predicted order.
std::vector<std::pair<double, double>> remainder_profile(const RaySweepTable& table,
                                                         double epsilon);

std::string sweep_csv(const std::vector<RaySweepTable>& tables);

struct StageError {
  std::string stage;
  std::string message;
};

struct AcceptanceEntry {
  std::string criterion;
  bool pass = false;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
};

struct ReportResult {
  bool pass = false;
  std::string json;
  std::vector<StageError> errors;
  std::vector<std::string> notes;
  std::vector<AcceptanceEntry> acceptance;
};

/// Full pipeline: bands, gaps, edge, assumptions, dispersion, support sweep,
/// leading-term forms, oracle sweeps, fits; emits report.json + CSV artifacts
/// into config.output_dir. Stage failures are recorded and reported, the
/// report is still emitted.
ReportResult full_report(const RunConfig& config);

}  // namespace gapasym
