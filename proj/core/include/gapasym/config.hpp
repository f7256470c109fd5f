#pragma once

#include "gapasym/common.hpp"
#include "gapasym/kvdoc.hpp"
#include "gapasym/periodic_operator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gapasym {

struct Tolerances {
  double tol_real = 1e-8;
  double tol_gauss = 1e-11;
  double tol_quad = 1e-6;
  double tol_f = 1e-8;
  double tol_sym = 1e-6;
};

/// Validated run configuration. The operator is given either inline as an
/// [operator] table or by `operator_file = "path"`.
struct RunConfig {
  std::string operator_file;          // empty when inline
  std::optional<KvTable> operator_inline;
  int cutoff = 0;                     // 0: convergence-chosen
  int grid_resolution = 32;
  int n_bands = 6;
  int gap_index = 1;                  // 1-based among finite gaps; 0: bottom of spectrum
  std::string edge_side = "lower";    // lower | upper
  std::vector<double> lambdas{-0.25};  // working frame, negative
  int directions = 64;                // ignored when direction_list is set
  std::vector<VectorXd> direction_list;
  std::vector<double> r_list{10.0, 20.0, 40.0};
  Tolerances tol;
  std::string output_dir = "out";
  bool cache = true;
  int threads = 0;                    // 0: hardware concurrency
  double eta_radius = 0.0;            // 0: chosen from the concavity radius
  double contour_t = -1.0;            // -1: automatic per sweep
  int oracle_m = 0;                   // 0: 8 * ceil(max r)

  PeriodicOperator load_operator() const;
};

/// Parse and validate. Unknown keys are rejected by name; tolerance and shape
/// violations raise NumericalError naming the field.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Round-trip serialization: parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Environment overrides (GAPASYM_OUTPUT_DIR, GAPASYM_THREADS) — the only
/// two settings the environment may change.
void apply_env_overrides(RunConfig& c);

}  // namespace gapasym
