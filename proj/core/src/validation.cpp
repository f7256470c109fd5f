#include "gapasym/validation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include <json.hpp>

#include "gapasym/cache.hpp"
#include "gapasym/csv.hpp"
#include "gapasym/parallel.hpp"

namespace gapasym {

RaySweepTable ray_sweep(const PeriodicOperator& op, const BandEdge& edge, int cutoff,
                        const SupportPoint& sp, const BlochPair& pair,
                        const std::vector<double>& r_list, const SweepOptions& opts) {
  RaySweepTable table;
  table.s = sp.s;
  table.lambda = sp.lambda;
  table.h = sp.h;
  if (r_list.empty()) return table;

  std::vector<double> radii = r_list;
  std::sort(radii.begin(), radii.end());
  const double r_max = radii.back();

  double t = opts.contour_t;
  if (t < 0.0) {
    t = 1.0 - 4.0 / std::max(sp.h * r_max, 4.0);
    t = std::clamp(t, 0.0, 0.9);
  }
  const int m = opts.oracle_m > 0
                    ? opts.oracle_m
                    : 8 * static_cast<int>(std::ceil(r_max));

  std::vector<std::pair<VectorXd, VectorXd>> pairs;
  const VectorXd y = VectorXd::Zero(op.dim());
  for (double r : radii) pairs.emplace_back(r * sp.s, y);

  const VectorXd shift = t * sp.beta_s;
  const double lambda_phys = edge.to_physical(sp.lambda);
  const auto samples =
      green_batch(op, lambda_phys, pairs, t > 0.0 ? shift : VectorXd(), cutoff, m,
                  opts.oracle);

  for (std::size_t i = 0; i < radii.size(); ++i) {
    SweepRow row;
    row.r = radii[i];
    row.oracle = samples[i].value;
    LeadingTermInputs in{&edge, &sp, &pair, pairs[i].first, pairs[i].second};
    row.lead = leading_term(in);
    row.abs_ratio = std::abs(row.oracle) / std::max(std::abs(row.lead), 1e-300);
    row.phase_diff = wrap_pi(std::arg(row.oracle) - std::arg(row.lead));
    row.remainder = row.oracle - row.lead;
    row.contour_t = t;
    row.grid = samples[i].grid;
    row.converged = samples[i].converged;
    table.rows.push_back(row);
  }
  return table;
}

FitResult fit_decay_points(const std::vector<std::pair<double, double>>& r_absg,
                           double window_fraction) {
  require(r_absg.size() >= 4, "fit_decay: need at least 4 rows");
  double r_lo = r_absg.front().first, r_hi = r_absg.front().first;
  for (const auto& [r, g] : r_absg) {
    r_lo = std::min(r_lo, r);
    r_hi = std::max(r_hi, r);
  }
  const double cut = r_hi - window_fraction * (r_hi - r_lo);
  std::vector<std::pair<double, double>> rows;
  std::set<long long> distinct;
  for (const auto& [r, g] : r_absg) {
    if (r < cut - 1e-12) continue;
    require(g > 0.0, "fit_decay: nonpositive magnitude in the fit window");
    rows.emplace_back(r, std::log(g));
    distinct.insert(std::llround(r * 1e9));
  }
  require(distinct.size() >= 3, "fit_decay: fewer than 3 distinct radii (degenerate fit)");

  const int n = static_cast<int>(rows.size());
  MatrixXd a(n, 3);
  VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = -rows[i].first;
    a(i, 1) = -std::log(rows[i].first);
    a(i, 2) = 1.0;
    b[i] = rows[i].second;
  }
  const VectorXd coef = a.colPivHouseholderQr().solve(b);
  const VectorXd res = a * coef - b;
  const double mean = b.mean();
  double ss_tot = 0.0;
  for (int i = 0; i < n; ++i) ss_tot += (b[i] - mean) * (b[i] - mean);
  FitResult fit;
  fit.exp_rate = coef[0];
  fit.alg_exponent = coef[1];
  fit.intercept = coef[2];
  fit.r_squared = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
  fit.window_lo = cut;
  fit.window_hi = r_hi;
  return fit;
}

FitResult fit_decay(const RaySweepTable& table, double window_fraction) {
  std::vector<std::pair<double, double>> rows;
  for (const auto& row : table.rows) rows.emplace_back(row.r, std::abs(row.oracle));
  return fit_decay_points(rows, window_fraction);
}

std::vector<std::pair<double, double>> remainder_profile(const RaySweepTable& table,
                                                         double epsilon) {
  const int d = static_cast<int>(table.s.size());
  std::vector<std::pair<double, double>> out;
  for (const auto& row : table.rows) {
    const double scaled = std::abs(row.remainder) * std::exp(table.h * row.r) *
                          std::pow(row.r, 0.5 * d - epsilon);
    out.emplace_back(row.r, scaled);
  }
  return out;
}

std::string sweep_csv(const std::vector<RaySweepTable>& tables) {
  CsvWriter csv({"s1", "s2", "lambda", "h", "r", "re_oracle", "im_oracle", "re_lead",
                 "im_lead", "abs_ratio", "phase_diff", "re_remainder", "im_remainder",
                 "contour_t", "grid", "converged"});
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      csv.cell(t.s[0])
          .cell(t.s.size() > 1 ? t.s[1] : 0.0)
          .cell(t.lambda)
          .cell(t.h)
          .cell(row.r)
          .cell(row.oracle.real())
          .cell(row.oracle.imag())
          .cell(row.lead.real())
          .cell(row.lead.imag())
          .cell(row.abs_ratio)
          .cell(row.phase_diff)
          .cell(row.remainder.real())
          .cell(row.remainder.imag())
          .cell(row.contour_t)
          .cell(row.grid)
          .cell(row.converged ? 1 : 0);
      csv.end_row();
    }
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// full pipeline
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

std::vector<VectorXd> make_directions(int dim, int count,
                                      const std::vector<VectorXd>& explicit_list) {
  if (!explicit_list.empty()) return explicit_list;
  std::vector<VectorXd> out;
  if (dim == 1) {
    VectorXd p(1), m(1);
    p << 1.0;
    m << -1.0;
    out = {p};
    if (count > 1) out.push_back(m);
    return out;
  }
  if (dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double th = kTwoPi * i / count;
      VectorXd s(2);
      s << std::cos(th), std::sin(th);
      out.push_back(s);
    }
    return out;
  }
  // d = 3: coordinate axes plus diagonals, truncated to `count`
  for (int axis = 0; axis < 3 && static_cast<int>(out.size()) < count; ++axis) {
    for (int sign : {+1, -1}) {
      VectorXd s = VectorXd::Zero(3);
      s[axis] = sign;
      out.push_back(s);
      if (static_cast<int>(out.size()) >= count) break;
    }
  }
  while (static_cast<int>(out.size()) < count) {
    VectorXd s = VectorXd::Constant(3, 1.0 / std::sqrt(3.0));
    out.push_back(s);
    break;
  }
  return out;
}

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json report_entry(const AcceptanceEntry& e) {
  return json{{"criterion", e.criterion},
              {"pass", e.pass},
              {"measured", e.measured},
              {"expected", e.expected},
              {"tolerance", e.tolerance}};
}

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots for a gapasym report directory (bands.csv, support.csv, sweeps.csv)."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return rows


def main(outdir="."):
    if os.path.exists(os.path.join(outdir, "support.csv")):
        rows = read(os.path.join(outdir, "support.csv"))
        th = [float(r["theta"]) for r in rows]
        h = [float(r["h"]) for r in rows]
        k = [float(r["curvature"]) for r in rows]
        fig, ax = plt.subplots(1, 2, figsize=(9, 4))
        ax[0].plot(th, h, ".-")
        ax[0].set_xlabel("theta")
        ax[0].set_ylabel("h(s)")
        ax[1].plot(th, k, ".-")
        ax[1].set_xlabel("theta")
        ax[1].set_ylabel("Gauss-Kronecker curvature")
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "support.png"), dpi=130)
    if os.path.exists(os.path.join(outdir, "sweeps.csv")):
        rows = read(os.path.join(outdir, "sweeps.csv"))
        fig, ax = plt.subplots(figsize=(6, 4))
        seen = {}
        for r in rows:
            key = (r["s1"], r["s2"])
            seen.setdefault(key, []).append((float(r["r"]), float(r["abs_ratio"])))
        for key, pts in seen.items():
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], ".-", label=str(key))
        ax.axhline(1.0, color="k", lw=0.5)
        ax.set_xlabel("r")
        ax.set_ylabel("|G_oracle| / |G_lead|")
        if len(seen) <= 10:
            ax.legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "ratio.png"), dpi=130)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
)PY";

}  // namespace

ReportResult full_report(const RunConfig& config) {
  ReportResult result;
  json report;
  report["schema_version"] = 1;

  set_thread_count(config.threads);
  std::filesystem::create_directories(config.output_dir);
  FileCache cache(config.cache ? config.output_dir + "/cache" : "");

  auto record_error = [&](const std::string& stage, const std::string& msg) {
    result.errors.push_back({stage, msg});
  };
  auto gate = [&](const std::string& name, bool pass, double measured, double expected,
                  double tol) {
    result.acceptance.push_back({name, pass, measured, expected, tol});
  };

  std::optional<PeriodicOperator> op_storage;
  try {
    op_storage = config.load_operator();
  } catch (const std::exception& e) {
    record_error("operator", e.what());
    report["errors"] = json::array({{{"stage", "operator"}, {"message", e.what()}}});
    result.json = report.dump(2);
    result.pass = false;
    write_file(config.output_dir + "/report.json", result.json);
    return result;
  }
  const PeriodicOperator& op = *op_storage;
  const std::string ophash = op.content_hash();
  report["operator"] = {{"hash", ophash},
                        {"dimension", op.dim()},
                        {"ellipticity_floor", op.ellipticity_floor()}};

  const int cutoff = config.cutoff > 0 ? config.cutoff : auto_cutoff(op, config.n_bands);
  report["cutoff"] = cutoff;

  // --- bands ---
  BandGrid bands;
  try {
    const std::string key = "bands_" + ophash + "_" + std::to_string(cutoff) + "_" +
                            std::to_string(config.grid_resolution) + "_" +
                            std::to_string(config.n_bands);
    bool from_cache = false;
    if (auto payload = cache.load(key)) {
      if (auto grid = band_grid_deserialize(*payload)) {
        bands = std::move(*grid);
        from_cache = true;
      }
    }
    if (!from_cache) {
      bands = compute_bands(op, config.grid_resolution, config.n_bands, cutoff);
      cache.store(key, band_grid_serialize(bands));
    }
    write_file(config.output_dir + "/bands.csv", band_grid_csv(bands));
  } catch (const std::exception& e) {
    record_error("bands", e.what());
  }

  double evenness = std::numeric_limits<double>::quiet_NaN();
  if (!bands.nodes.empty()) {
    evenness = evenness_defect(bands);
    gate("evenness |lambda(k)-lambda(-k)| on grid", evenness <= 1e-10, evenness, 0.0,
         1e-10);
  }

  // hermiticity over random complex quasimomenta
  {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    std::uniform_real_distribution<double> im(-1.0, 1.0);
    const FourierIndexSet basis(op.dim(), std::min(cutoff, 4));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      VectorXcd k(op.dim());
      for (int j = 0; j < op.dim(); ++j) k[j] = cxd(uni(rng), im(rng));
      worst = std::max(worst, hermiticity_residual(op, k, basis));
    }
    gate("hermiticity residual over 100 complex k", worst <= 1e-13, worst, 0.0, 1e-13);
  }

  // --- gap selection and edge ---
  std::vector<SpectralGap> gaps;
  SpectralGap gap;
  GapSide side = config.edge_side == "lower" ? GapSide::Lower : GapSide::Upper;
  bool have_gap = false;
  if (!bands.nodes.empty()) {
    gaps = find_gaps(bands);
    json gj = json::array();
    for (const auto& g : gaps)
      gj.push_back({{"below_band", g.below_band},
                    {"lower", g.lower},
                    {"upper", g.upper},
                    {"certified_on_grid", g.certified_on_grid}});
    report["gaps"] = gj;
    if (config.gap_index == 0) {
      gap = bottom_gap(bands);
      side = GapSide::Upper;
      have_gap = true;
    } else if (static_cast<int>(gaps.size()) >= config.gap_index) {
      gap = gaps[config.gap_index - 1];
      have_gap = true;
    } else {
      result.notes.push_back("no finite gap at requested index; falling back to the "
                             "bottom of the spectrum");
      gap = bottom_gap(bands);
      side = GapSide::Upper;
      have_gap = true;
    }
  }

  BandEdge edge;
  bool have_edge = false;
  if (have_gap) {
    try {
      edge = locate_edge(op, bands, gap, side, cutoff);
      check_assumptions(op, edge, bands,
                        AssumptionTolerances{1e-8, 1e-2, 1e-8, config.tol.tol_sym});
      have_edge = true;
      report["edge"] = {{"band_index", edge.band_index},
                        {"k0", vec_to_json(edge.k0)},
                        {"edge_energy", edge.edge_energy},
                        {"shift_applied", edge.shift_applied},
                        {"orientation", edge.orientation},
                        {"gap_width", edge.gap_width},
                        {"epsilon0", edge.epsilon0},
                        {"hessian", mat_to_json(edge.hessian)}};
      auto ar = [&](const AssumptionCheck& c) {
        return json{{"pass", c.pass}, {"margin", c.margin}, {"detail", c.detail}};
      };
      report["assumptions"] = {{"a1", ar(edge.report.a1)}, {"a2", ar(edge.report.a2)},
                               {"a3", ar(edge.report.a3)}, {"a4", ar(edge.report.a4)},
                               {"a5", ar(edge.report.a5)},
                               {"overall", edge.report.overall}};
      gate("assumption report overall", edge.report.overall, edge.report.overall ? 1 : 0,
           1, 0);
      if (!edge.report.overall) {
        record_error("assumptions",
                     "assumption check failed; downstream stages refused");
        have_edge = false;
      }
    } catch (const std::exception& e) {
      record_error("edge", e.what());
    }
  }

  // --- lambda admissibility ---
  std::vector<double> lambdas = config.lambdas;
  if (have_edge) {
    for (double l : lambdas) {
      if (!(l < 0.0 && -l < edge.gap_width)) {
        record_error("lambda",
                     "lambda " + format_g17(l) + " not in gap: working levels must lie in (" +
                         format_g17(-edge.gap_width) + ", 0)");
        have_edge = false;
      }
    }
  }

  // --- dispersion, support sweep, asymptotics, oracle sweeps ---
  json per_direction = json::array();
  std::vector<RaySweepTable> sweep_tables;
  if (have_edge) {
    const auto directions =
        make_directions(op.dim(), config.directions, config.direction_list);
    double beta_scale = 0.0;
    {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(edge.hessian, Eigen::EigenvaluesOnly);
      const double lmax = *std::max_element(lambdas.begin(), lambdas.end(),
                                            [](double a, double b) {
                                              return std::abs(a) < std::abs(b);
                                            });
      beta_scale = std::sqrt(2.0 * std::abs(lmax) / es.eigenvalues().minCoeff());
    }
    double conc_radius = 0.0;
    try {
      std::vector<VectorXd> probe(directions.begin(),
                                  directions.begin() +
                                      std::min<std::size_t>(directions.size(), 8));
      conc_radius = concavity_radius(op, edge, probe,
                                     std::min(1.5, 2.2 * beta_scale + 0.05), cutoff);
      report["concavity_radius"] = conc_radius;
    } catch (const std::exception& e) {
      record_error("dispersion", e.what());
    }

    if (conc_radius > 0.0) {
      const double lambda0 = lambdas.front();
      struct DirectionOut {
        SupportPoint sp;
        BlochPair pair;
        double form_defect = 0.0;
        std::string error;
      };
      std::vector<DirectionOut> outs(directions.size());
      parallel_for(directions.size(), [&](std::size_t i) {
        try {
          DispersionTracker tracker(op, edge, cutoff);
          TrackedDispersionField field(tracker);
          outs[i].sp = support_point(field, edge.hessian, lambda0, directions[i],
                                     SupportTolerances{1e-11, config.tol.tol_gauss, 80, 30});
          outs[i].pair = bloch_pair(tracker, outs[i].sp.beta_s, config.tol.tol_f);
          // curvature-form agreement at the median radius
          const double r = config.r_list[config.r_list.size() / 2];
          const VectorXd x = r * directions[i];
          const VectorXd y = VectorXd::Zero(op.dim());
          LeadingTermInputs in{&edge, &outs[i].sp, &outs[i].pair, x, y};
          const cxd a = leading_term(in);
          const cxd b = leading_term_curvature_form(in);
          outs[i].form_defect = std::abs(a - b) / std::max(std::abs(a), 1e-300);
        } catch (const std::exception& e) {
          outs[i].error = e.what();
        }
      });

      CsvWriter support_csv({"theta", "s1", "s2", "lambda", "beta1", "beta2", "h",
                             "grad_norm", "proj_hess_det", "curvature", "residual"});
      double worst_gauss = 0.0, worst_level = 0.0, worst_form = 0.0;
      bool sweep_ok = true;
      for (std::size_t i = 0; i < directions.size(); ++i) {
        if (!outs[i].error.empty()) {
          record_error("support", "direction " + std::to_string(i) + ": " + outs[i].error);
          sweep_ok = false;
          continue;
        }
        const auto& sp = outs[i].sp;
        const double theta =
            op.dim() == 2 ? std::atan2(sp.s[1], sp.s[0]) : static_cast<double>(i);
        support_csv.cell(theta)
            .cell(sp.s[0])
            .cell(sp.s.size() > 1 ? sp.s[1] : 0.0)
            .cell(sp.lambda)
            .cell(sp.beta_s[0])
            .cell(sp.beta_s.size() > 1 ? sp.beta_s[1] : 0.0)
            .cell(sp.h)
            .cell(sp.grad_norm)
            .cell(sp.proj_hess_det)
            .cell(sp.curvature)
            .cell(sp.newton_residual);
        support_csv.end_row();
        worst_gauss = std::max(worst_gauss, sp.newton_residual);
        worst_form = std::max(worst_form, outs[i].form_defect);
        worst_level = std::max(worst_level, sp.newton_residual);
        json dj = {{"s", vec_to_json(sp.s)},
                   {"beta_s", vec_to_json(sp.beta_s)},
                   {"h", sp.h},
                   {"grad_norm", sp.grad_norm},
                   {"proj_hess_det", sp.proj_hess_det},
                   {"curvature", sp.curvature},
                   {"newton_residual", sp.newton_residual},
                   {"form_defect", outs[i].form_defect}};
        per_direction.push_back(dj);
      }
      write_file(config.output_dir + "/support.csv", support_csv.str());
      gate("support Newton residual", sweep_ok && worst_gauss <= config.tol.tol_gauss,
           worst_gauss, 0.0, config.tol.tol_gauss);
      gate("leading-term form agreement", worst_form <= 1e-8, worst_form, 0.0, 1e-8);

      // gauge invariance spot check (first healthy direction)
      for (std::size_t i = 0; i < directions.size(); ++i) {
        if (!outs[i].error.empty()) continue;
        const double r = config.r_list.front();
        const VectorXd x = r * directions[i];
        const VectorXd y = VectorXd::Zero(op.dim());
        LeadingTermInputs in{&edge, &outs[i].sp, &outs[i].pair, x, y};
        const cxd base = leading_term(in);
        BlochPair scaled = outs[i].pair;
        const cxd a(1.7, -0.4), b(-0.3, 2.1);
        scaled.phi_plus *= a;
        scaled.phi_minus *= b;
        scaled.pairing = scaled.phi_minus.dot(scaled.phi_plus);
        LeadingTermInputs in2{&edge, &outs[i].sp, &scaled, x, y};
        const double defect = std::abs(leading_term(in2) - base) / std::abs(base);
        gate("gauge invariance of the leading term", defect <= 1e-13, defect, 0.0, 1e-13);
        break;
      }

      // oracle sweeps over a direction subset
      const std::size_t n_sweep = std::min<std::size_t>(directions.size(), 8);
      const std::size_t stride = std::max<std::size_t>(1, directions.size() / n_sweep);
      double worst_rate = 0.0;
      bool ratio_trend = true, remainder_ok = true, oracle_conv = true;
      for (std::size_t i = 0; i < directions.size(); i += stride) {
        if (!outs[i].error.empty()) continue;
        try {
          SweepOptions sopts;
          sopts.contour_t = config.contour_t;
          sopts.oracle_m = config.oracle_m;
          sopts.oracle.tol_quad = config.tol.tol_quad;
          RaySweepTable table = ray_sweep(op, edge, cutoff, outs[i].sp, outs[i].pair,
                                          config.r_list, sopts);
          for (const auto& row : table.rows) oracle_conv = oracle_conv && row.converged;
          if (table.rows.size() >= 2) {
            const auto& rows = table.rows;
            for (std::size_t k = 1; k + 1 < rows.size(); ++k)
              if (std::abs(rows[k + 1].abs_ratio - 1.0) >
                  std::abs(rows[k].abs_ratio - 1.0) + 0.02)
                ratio_trend = false;
          }
          if (table.rows.size() >= 4) {
            const FitResult fit = fit_decay(table);
            worst_rate = std::max(worst_rate,
                                  std::abs(fit.exp_rate - table.h) / table.h);
            auto prof = remainder_profile(table, 0.25);
            for (std::size_t k = prof.size() / 2; k + 1 < prof.size(); ++k)
              if (prof[k + 1].second > prof[k].second * 1.05) remainder_ok = false;
          }
          sweep_tables.push_back(std::move(table));
        } catch (const std::exception& e) {
          record_error("oracle_sweep", e.what());
          oracle_conv = false;
        }
      }
      if (!sweep_tables.empty()) {
        write_file(config.output_dir + "/sweeps.csv", sweep_csv(sweep_tables));
        gate("oracle convergence flags", oracle_conv, oracle_conv ? 1 : 0, 1, 0);
        gate("|ratio - 1| decreasing along sweeps", ratio_trend, ratio_trend ? 1 : 0, 1, 0);
        if (sweep_tables.front().rows.size() >= 4)
          gate("fitted rate matches h(s)", worst_rate <= 0.01, worst_rate, 0.0, 0.01);
        gate("remainder profile non-increasing (top half)", remainder_ok,
             remainder_ok ? 1 : 0, 1, 0);
      }
    }
  }
  report["per_direction"] = per_direction;

  json errj = json::array();
  for (const auto& e : result.errors) errj.push_back({{"stage", e.stage},
                                                      {"message", e.message}});
  report["errors"] = errj;
  report["notes"] = result.notes;
  json accj = json::array();
  bool all_pass = result.errors.empty();
  for (const auto& e : result.acceptance) {
    accj.push_back(report_entry(e));
    all_pass = all_pass && e.pass;
  }
  report["acceptance"] = accj;
  report["pass"] = all_pass;

  result.pass = all_pass;
  result.json = report.dump(2);
  write_file(config.output_dir + "/report.json", result.json);
  write_file(config.output_dir + "/plot_report.py", kPlotScript);
  return result;
}

}  // namespace gapasym
