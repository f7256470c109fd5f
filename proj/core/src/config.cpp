#include "gapasym/config.hpp"

#include <cstdlib>
#include <set>

#include "gapasym/cache.hpp"

namespace gapasym {

PeriodicOperator RunConfig::load_operator() const {
  if (operator_inline.has_value()) return operator_from_kv(*operator_inline);
  require(!operator_file.empty(), "config: no operator given (operator_file or [operator])");
  return load_operator_file(operator_file);
}

namespace {

const std::set<std::string> kTopKeys = {
    "schema_version", "operator_file", "operator",   "cutoff",     "grid_resolution",
    "n_bands",        "gap_index",     "edge_side",  "lambdas",    "directions",
    "direction_list", "r_list",        "tolerances", "output_dir", "cache",
    "threads",        "eta_radius",    "contour_t",  "oracle_m"};

const std::set<std::string> kTolKeys = {"tol_real", "tol_gauss", "tol_quad", "tol_f",
                                        "tol_sym"};

const std::set<std::string> kOperatorKeys = {"schema_version", "dimension",
                                             "ellipticity_floor", "metric", "potential"};

void reject_unknown(const KvTable& t, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : t.entries()) {
    (void)value;
    if (!known.count(key))
      throw NumericalError("config: unknown key '" + key + "'" +
                           (where.empty() ? "" : " in " + where));
  }
}

double positive(const KvValue& v, const std::string& name) {
  const double x = v.as_double();
  require(x > 0.0, "config: " + name + " must be positive");
  return x;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const KvTable t = parse_kv(text);
  reject_unknown(t, kTopKeys, "");
  RunConfig c;
  if (const KvValue* v = t.find("schema_version"))
    require(v->as_int() == 1, "config: unsupported schema_version");
  if (const KvValue* v = t.find("operator_file")) c.operator_file = v->as_string();
  if (const KvValue* v = t.find("operator")) {
    reject_unknown(v->as_table(), kOperatorKeys, "[operator]");
    c.operator_inline = v->as_table();
  }
  require(!(c.operator_inline.has_value() && !c.operator_file.empty()),
          "config: give either operator_file or an inline [operator], not both");
  if (const KvValue* v = t.find("cutoff")) c.cutoff = static_cast<int>(v->as_int());
  require(c.cutoff >= 0, "config: cutoff must be >= 0 (0 selects automatically)");
  if (const KvValue* v = t.find("grid_resolution"))
    c.grid_resolution = static_cast<int>(v->as_int());
  require(c.grid_resolution >= 3, "config: grid_resolution must be >= 3");
  if (const KvValue* v = t.find("n_bands")) c.n_bands = static_cast<int>(v->as_int());
  require(c.n_bands >= 2, "config: n_bands must be >= 2");
  if (const KvValue* v = t.find("gap_index")) c.gap_index = static_cast<int>(v->as_int());
  require(c.gap_index >= 0, "config: gap_index must be >= 0 (0 = bottom of spectrum)");
  if (const KvValue* v = t.find("edge_side")) c.edge_side = v->as_string();
  require(c.edge_side == "lower" || c.edge_side == "upper",
          "config: edge_side must be 'lower' or 'upper'");
  if (const KvValue* v = t.find("lambdas")) {
    c.lambdas.clear();
    for (const auto& item : v->as_array()) c.lambdas.push_back(item.as_double());
  }
  require(!c.lambdas.empty(), "config: lambdas must be nonempty");
  for (double l : c.lambdas)
    require(l < 0.0, "config: lambdas are working-frame levels and must be negative");
  if (const KvValue* v = t.find("directions")) c.directions = static_cast<int>(v->as_int());
  require(c.directions >= 1, "config: directions must be >= 1");
  if (const KvValue* v = t.find("direction_list")) {
    for (const auto& item : v->as_array()) {
      const auto& comp = item.as_array();
      VectorXd s(static_cast<int>(comp.size()));
      for (std::size_t j = 0; j < comp.size(); ++j)
        s[static_cast<int>(j)] = comp[j].as_double();
      require(s.norm() > 0.0, "config: zero direction in direction_list");
      c.direction_list.push_back(s / s.norm());
    }
  }
  if (const KvValue* v = t.find("r_list")) {
    c.r_list.clear();
    for (const auto& item : v->as_array()) c.r_list.push_back(item.as_double());
  }
  require(!c.r_list.empty(), "config: r_list must be nonempty");
  for (double r : c.r_list) require(r > 0.0, "config: r_list entries must be positive");
  if (const KvValue* v = t.find("tolerances")) {
    const KvTable& tt = v->as_table();
    reject_unknown(tt, kTolKeys, "[tolerances]");
    if (const KvValue* x = tt.find("tol_real")) c.tol.tol_real = positive(*x, "tol_real");
    if (const KvValue* x = tt.find("tol_gauss")) c.tol.tol_gauss = positive(*x, "tol_gauss");
    if (const KvValue* x = tt.find("tol_quad")) c.tol.tol_quad = positive(*x, "tol_quad");
    if (const KvValue* x = tt.find("tol_f")) c.tol.tol_f = positive(*x, "tol_f");
    if (const KvValue* x = tt.find("tol_sym")) c.tol.tol_sym = positive(*x, "tol_sym");
  }
  if (const KvValue* v = t.find("output_dir")) c.output_dir = v->as_string();
  if (const KvValue* v = t.find("cache")) c.cache = v->as_bool();
  if (const KvValue* v = t.find("threads")) c.threads = static_cast<int>(v->as_int());
  require(c.threads >= 0, "config: threads must be >= 0");
  if (const KvValue* v = t.find("eta_radius")) c.eta_radius = v->as_double();
  require(c.eta_radius >= 0.0 && c.eta_radius < kPi, "config: eta_radius out of range");
  if (const KvValue* v = t.find("contour_t")) c.contour_t = v->as_double();
  require(c.contour_t < 1.0, "config: contour_t must be below 1");
  if (const KvValue* v = t.find("oracle_m")) c.oracle_m = static_cast<int>(v->as_int());
  require(c.oracle_m >= 0, "config: oracle_m must be >= 0");
  return c;
}

RunConfig load_config_file(const std::string& path) {
  auto text = read_file(path);
  require(text.has_value(), "cannot read config file: " + path);
  return parse_config(*text);
}

std::string serialize_config(const RunConfig& c) {
  KvTable t;
  t.insert("schema_version", KvValue::of_int(1));
  if (!c.operator_file.empty())
    t.insert("operator_file", KvValue::of_string(c.operator_file));
  t.insert("cutoff", KvValue::of_int(c.cutoff));
  t.insert("grid_resolution", KvValue::of_int(c.grid_resolution));
  t.insert("n_bands", KvValue::of_int(c.n_bands));
  t.insert("gap_index", KvValue::of_int(c.gap_index));
  t.insert("edge_side", KvValue::of_string(c.edge_side));
  std::vector<KvValue> ls;
  for (double l : c.lambdas) ls.push_back(KvValue::of_float(l));
  t.insert("lambdas", KvValue::of_array(std::move(ls)));
  t.insert("directions", KvValue::of_int(c.directions));
  if (!c.direction_list.empty()) {
    std::vector<KvValue> dl;
    for (const auto& s : c.direction_list) {
      std::vector<KvValue> comp;
      for (int j = 0; j < s.size(); ++j) comp.push_back(KvValue::of_float(s[j]));
      dl.push_back(KvValue::of_array(std::move(comp)));
    }
    t.insert("direction_list", KvValue::of_array(std::move(dl)));
  }
  std::vector<KvValue> rs;
  for (double r : c.r_list) rs.push_back(KvValue::of_float(r));
  t.insert("r_list", KvValue::of_array(std::move(rs)));
  t.insert("output_dir", KvValue::of_string(c.output_dir));
  t.insert("cache", KvValue::of_bool(c.cache));
  t.insert("threads", KvValue::of_int(c.threads));
  t.insert("eta_radius", KvValue::of_float(c.eta_radius));
  t.insert("contour_t", KvValue::of_float(c.contour_t));
  t.insert("oracle_m", KvValue::of_int(c.oracle_m));
  KvTable tol;
  tol.insert("tol_real", KvValue::of_float(c.tol.tol_real));
  tol.insert("tol_gauss", KvValue::of_float(c.tol.tol_gauss));
  tol.insert("tol_quad", KvValue::of_float(c.tol.tol_quad));
  tol.insert("tol_f", KvValue::of_float(c.tol.tol_f));
  tol.insert("tol_sym", KvValue::of_float(c.tol.tol_sym));
  t.insert("tolerances", KvValue::of_table(std::move(tol)));
  if (c.operator_inline.has_value())
    t.insert("operator", KvValue::of_table(*c.operator_inline));
  return serialize_kv(t);
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto dir_eq = [&] {
    if (a.direction_list.size() != b.direction_list.size()) return false;
    for (std::size_t i = 0; i < a.direction_list.size(); ++i)
      if (a.direction_list[i] != b.direction_list[i]) return false;
    return true;
  };
  auto inline_eq = [&] {
    if (a.operator_inline.has_value() != b.operator_inline.has_value()) return false;
    if (!a.operator_inline.has_value()) return true;
    return serialize_kv(*a.operator_inline) == serialize_kv(*b.operator_inline);
  };
  return a.operator_file == b.operator_file && inline_eq() && a.cutoff == b.cutoff &&
         a.grid_resolution == b.grid_resolution && a.n_bands == b.n_bands &&
         a.gap_index == b.gap_index && a.edge_side == b.edge_side &&
         a.lambdas == b.lambdas && a.directions == b.directions && dir_eq() &&
         a.r_list == b.r_list && a.tol.tol_real == b.tol.tol_real &&
         a.tol.tol_gauss == b.tol.tol_gauss && a.tol.tol_quad == b.tol.tol_quad &&
         a.tol.tol_f == b.tol.tol_f && a.tol.tol_sym == b.tol.tol_sym &&
         a.output_dir == b.output_dir && a.cache == b.cache && a.threads == b.threads &&
         a.eta_radius == b.eta_radius && a.contour_t == b.contour_t &&
         a.oracle_m == b.oracle_m;
}

void apply_env_overrides(RunConfig& c) {
  if (const char* dir = std::getenv("GAPASYM_OUTPUT_DIR")) c.output_dir = dir;
  if (const char* th = std::getenv("GAPASYM_THREADS")) {
    const int n = std::atoi(th);
    if (n > 0) c.threads = n;
  }
}

}  // namespace gapasym
