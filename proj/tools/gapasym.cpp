// Command-line front end: band structures, gap-edge checks, complex
// dispersion, level-set geometry, Green's-function asymptotics and the
// oracle/validation pipeline for periodic elliptic operators.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "gapasym/asymptotics.hpp"
#include "gapasym/cache.hpp"
#include "gapasym/csv.hpp"
#include "gapasym/parallel.hpp"
#include "gapasym/validation.hpp"

using namespace gapasym;
using nlohmann::json;

namespace {

struct Pipeline {
  PeriodicOperator op;
  int cutoff = 0;
  BandGrid bands;
  std::vector<SpectralGap> gaps;
  SpectralGap gap;
  GapSide side = GapSide::Upper;
  BandEdge edge;
};

RunConfig load(const std::string& path) {
  RunConfig c = load_config_file(path);
  apply_env_overrides(c);
  set_thread_count(c.threads);
  std::filesystem::create_directories(c.output_dir);
  return c;
}

Pipeline run_band_pipeline(const RunConfig& c, bool need_edge) {
  Pipeline p{c.load_operator()};
  p.cutoff = c.cutoff > 0 ? c.cutoff : auto_cutoff(p.op, c.n_bands);
  p.bands = compute_bands(p.op, c.grid_resolution, c.n_bands, p.cutoff);
  p.gaps = find_gaps(p.bands);
  if (!need_edge) return p;
  if (c.gap_index == 0 || static_cast<int>(p.gaps.size()) < c.gap_index) {
    if (c.gap_index != 0)
      std::fprintf(stderr, "note: no finite gap #%d; using the bottom of the spectrum\n",
                   c.gap_index);
    p.gap = bottom_gap(p.bands);
    p.side = GapSide::Upper;
  } else {
    p.gap = p.gaps[c.gap_index - 1];
    p.side = c.edge_side == "lower" ? GapSide::Lower : GapSide::Upper;
  }
  p.edge = locate_edge(p.op, p.bands, p.gap, p.side, p.cutoff);
  check_assumptions(p.op, p.edge, p.bands,
                    AssumptionTolerances{1e-8, 1e-2, 1e-8, c.tol.tol_sym});
  return p;
}

std::vector<VectorXd> directions_of(const RunConfig& c, int dim) {
  if (!c.direction_list.empty()) return c.direction_list;
  std::vector<VectorXd> out;
  if (dim == 1) {
    VectorXd s(1);
    s << 1.0;
    out.push_back(s);
    return out;
  }
  for (int i = 0; i < c.directions; ++i) {
    const double th = kTwoPi * i / c.directions;
    VectorXd s(dim);
    s.setZero();
    s[0] = std::cos(th);
    s[1] = std::sin(th);
    out.push_back(s);
  }
  return out;
}

int cmd_bands(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, false);
  write_file(c.output_dir + "/bands.csv", band_grid_csv(p.bands));
  std::printf("cutoff %d, grid %d^%d, %d bands -> %s/bands.csv\n", p.cutoff,
              c.grid_resolution, p.op.dim(), c.n_bands, c.output_dir.c_str());
  if (p.gaps.empty()) {
    std::printf("no finite gap between the first %d bands\n", c.n_bands);
  } else {
    for (const auto& g : p.gaps)
      std::printf("gap below band %d: (%.12g, %.12g), width %.12g\n", g.below_band + 1,
                  g.lower, g.upper, g.width());
  }
  return 0;
}

int cmd_edge_check(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, true);
  const auto& rep = p.edge.report;
  std::printf("edge: band %d, orientation %+d, energy %.12g\n", p.edge.band_index,
              p.edge.orientation, p.edge.edge_energy);
  std::printf("k0 = (");
  for (int j = 0; j < p.op.dim(); ++j)
    std::printf("%s%.12g", j ? ", " : "", p.edge.k0[j]);
  std::printf(")\n");
  auto line = [](const char* name, const AssumptionCheck& a) {
    std::printf("%s: %s (margin %.3g) %s\n", name, a.pass ? "pass" : "FAIL", a.margin,
                a.detail.c_str());
  };
  line("A1", rep.a1);
  line("A2", rep.a2);
  line("A3", rep.a3);
  line("A4", rep.a4);
  line("A5", rep.a5);
  std::printf("overall: %s\n", rep.overall ? "pass" : "FAIL");
  return rep.overall ? 0 : 1;
}

int cmd_dispersion(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, true);
  const auto dirs = directions_of(c, p.op.dim());
  CsvWriter csv({"dir_index", "t", "energy", "reality_defect", "isolation",
                 "hess_max_eig"});
  json cache_doc = json::array();
  double radius = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    DispersionTracker tracker(p.op, p.edge, p.cutoff);
    StepControl ctl;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p.edge.hessian, Eigen::EigenvaluesOnly);
    const double lmax = *std::max_element(
        c.lambdas.begin(), c.lambdas.end(),
        [](double a, double b) { return std::abs(a) < std::abs(b); });
    ctl.t_max = std::min(1.5, 2.2 * std::sqrt(2.0 * std::abs(lmax) /
                                              es.eigenvalues().minCoeff()) + 0.05);
    const auto ray = continue_ray(tracker, dirs[i], ctl);
    radius = std::min(radius, ray.back().beta.norm());
    json jray = json::array();
    for (const auto& s : ray) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> hs(s.hessian, Eigen::EigenvaluesOnly);
      csv.cell(static_cast<int>(i))
          .cell(s.beta.norm())
          .cell(s.energy)
          .cell(s.reality_defect)
          .cell(s.isolation_margin)
          .cell(hs.eigenvalues().maxCoeff());
      csv.end_row();
      json js = {{"beta", std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size())},
                 {"energy", s.energy},
                 {"reality_defect", s.reality_defect},
                 {"isolation", s.isolation_margin}};
      json re = json::array(), im = json::array();
      for (int k = 0; k < s.eigvec.size(); ++k) {
        re.push_back(s.eigvec[k].real());
        im.push_back(s.eigvec[k].imag());
      }
      js["eigvec_re"] = re;
      js["eigvec_im"] = im;
      jray.push_back(js);
    }
    cache_doc.push_back({{"direction", std::vector<double>(dirs[i].data(),
                                                           dirs[i].data() + dirs[i].size())},
                         {"samples", jray}});
  }
  write_file(c.output_dir + "/dispersion.csv", csv.str());
  if (c.cache) {
    FileCache cache(c.output_dir + "/cache");
    cache.store("dispersion_" + p.op.content_hash() + "_" + std::to_string(p.cutoff),
                cache_doc.dump());
  }
  std::printf("concavity radius over %zu rays: %.12g -> %s/dispersion.csv\n",
              dirs.size(), radius, c.output_dir.c_str());
  return 0;
}

int cmd_support(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, true);
  if (!p.edge.report.overall) {
    std::fprintf(stderr, "assumption report failed; refusing the geometry stage\n");
    return 1;
  }
  const auto dirs = directions_of(c, p.op.dim());
  const double lambda = c.lambdas.front();
  CsvWriter csv({"theta", "s1", "s2", "lambda", "beta1", "beta2", "h", "grad_norm",
                 "proj_hess_det", "curvature", "residual"});
  double worst = 0.0;
  std::vector<SupportPoint> sweep(dirs.size());
  std::vector<std::string> errors(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    try {
      DispersionTracker tracker(p.op, p.edge, p.cutoff);
      TrackedDispersionField field(tracker);
      sweep[i] = support_point(field, p.edge.hessian, lambda, dirs[i],
                               SupportTolerances{1e-11, c.tol.tol_gauss, 80, 30});
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (!errors[i].empty()) {
      std::fprintf(stderr, "direction %zu failed: %s\n", i, errors[i].c_str());
      return 1;
    }
    const auto& sp = sweep[i];
    const double theta = p.op.dim() == 2 ? std::atan2(sp.s[1], sp.s[0]) : double(i);
    csv.cell(theta)
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
    csv.end_row();
    worst = std::max(worst, sp.newton_residual);
  }
  write_file(c.output_dir + "/support.csv", csv.str());
  std::printf("%zu directions, worst Newton residual %.3g -> %s/support.csv\n",
              dirs.size(), worst, c.output_dir.c_str());
  return worst <= c.tol.tol_gauss ? 0 : 1;
}

int cmd_asymptote(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, true);
  if (!p.edge.report.overall) {
    std::fprintf(stderr, "assumption report failed; refusing the asymptotics stage\n");
    return 1;
  }
  const auto dirs = directions_of(c, p.op.dim());
  const double lambda = c.lambdas.front();
  const VectorXd s = dirs.front();

  DispersionTracker tracker(p.op, p.edge, p.cutoff);
  TrackedDispersionField field(tracker);
  const SupportPoint sp = support_point(field, p.edge.hessian, lambda, s);
  const BlochPair pair = bloch_pair(tracker, sp.beta_s, c.tol.tol_f);

  const double eta = c.eta_radius > 0.0 ? c.eta_radius
                                        : std::min(0.4, 0.6 * sp.beta_s.norm() + 0.15);
  const int icutoff = std::min(p.cutoff, p.op.dim() == 2 ? 5 : p.cutoff);
  TrackedComplexDispersion cd(p.op, p.edge, icutoff);

  CsvWriter csv({"r", "re_lead", "im_lead", "re_I_numeric", "im_I_numeric", "I_closed",
                 "ratio_lead_forms", "ratio_I"});
  for (double r : c.r_list) {
    const VectorXd x = r * s;
    const VectorXd y = VectorXd::Zero(p.op.dim());
    LeadingTermInputs in{&p.edge, &sp, &pair, x, y};
    const cxd lead = leading_term(in);
    const cxd lead2 = leading_term_curvature_form(in);
    const cxd inum = integral_I_numeric(cd, p.edge, sp, eta, r);
    const double iclosed = integral_I_closed_form(sp, r);
    csv.cell(r)
        .cell(lead.real())
        .cell(lead.imag())
        .cell(inum.real())
        .cell(inum.imag())
        .cell(iclosed)
        .cell(std::abs(lead2) / std::abs(lead))
        .cell(std::abs(inum) / iclosed);
    csv.end_row();
    std::printf("r = %6.2f  |lead| = %.6e  |I_num|/I_closed = %.4f\n", r,
                std::abs(lead), std::abs(inum) / iclosed);
  }
  write_file(c.output_dir + "/asymptotics.csv", csv.str());
  return 0;
}

int cmd_oracle(const RunConfig& c) {
  Pipeline p = run_band_pipeline(c, true);
  const auto dirs = directions_of(c, p.op.dim());
  const double lambda_phys = p.edge.to_physical(c.lambdas.front());
  std::vector<OracleSample> samples;
  const VectorXd y = VectorXd::Zero(p.op.dim());
  for (double r : c.r_list) {
    const int m = c.oracle_m > 0 ? c.oracle_m : 8 * static_cast<int>(std::ceil(r));
    OracleOptions opts;
    opts.tol_quad = c.tol.tol_quad;
    samples.push_back(
        green_bz_integral(p.op, lambda_phys, r * dirs.front(), y, p.cutoff, m, opts));
    std::printf("r = %6.2f  G = %.9e %+.3e i  (M = %d, converged %d)\n", r,
                samples.back().value.real(), samples.back().value.imag(),
                samples.back().grid, samples.back().converged ? 1 : 0);
  }
  write_file(c.output_dir + "/oracle.csv", oracle_samples_csv(samples));
  return 0;
}

int cmd_validate(const RunConfig& c) {
  const ReportResult result = full_report(c);
  for (const auto& n : result.notes) std::printf("note: %s\n", n.c_str());
  for (const auto& e : result.errors)
    std::printf("stage %s failed: %s\n", e.stage.c_str(), e.message.c_str());
  for (const auto& a : result.acceptance)
    std::printf("[%s] %s (measured %.6g, tolerance %.3g)\n", a.pass ? "pass" : "FAIL",
                a.criterion.c_str(), a.measured, a.tolerance);
  std::printf("report: %s/report.json\n", c.output_dir.c_str());
  std::printf("%s\n", result.pass ? "VALIDATION PASS" : "VALIDATION FAIL");
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band structures, spectral-gap geometry and Green's-function "
               "asymptotics of periodic second-order elliptic operators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;

  auto add = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("-c,--config", config_path, "run configuration file")->required();
    sub->add_option("-o,--output", output_override, "output directory override");
    return sub;
  };
  add("bands", "band structure over the Brillouin zone, gap summary");
  add("edge-check", "locate a gap edge and verify the edge assumptions");
  add("dispersion", "continue the edge band to imaginary quasimomenta along rays");
  add("support", "Gauss-map inversion sweep over directions");
  add("asymptote", "leading asymptotic term and the scalar integral I");
  add("oracle", "brute-force Green's function by Brillouin-zone quadrature");
  add("validate", "full pipeline with report and acceptance gates");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = load(config_path);
    if (!output_override.empty()) {
      config.output_dir = output_override;
      std::filesystem::create_directories(config.output_dir);
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "bands") return cmd_bands(config);
    if (sub == "edge-check") return cmd_edge_check(config);
    if (sub == "dispersion") return cmd_dispersion(config);
    if (sub == "support") return cmd_support(config);
    if (sub == "asymptote") return cmd_asymptote(config);
    if (sub == "oracle") return cmd_oracle(config);
    if (sub == "validate") return cmd_validate(config);
    std::fprintf(stderr, "unknown subcommand %s\n", sub.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
