#include "gapasym/periodic_operator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "gapasym/cache.hpp"

namespace gapasym {

namespace {

std::vector<int> key_of(const VectorXi& n) {
  return std::vector<int>(n.data(), n.data() + n.size());
}

VectorXi vec_of(const std::vector<int>& k) {
  VectorXi n(static_cast<int>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) n[static_cast<int>(i)] = k[i];
  return n;
}

std::vector<int> negate(const std::vector<int>& k) {
  std::vector<int> m(k);
  for (auto& c : m) c = -c;
  return m;
}

bool is_zero_key(const std::vector<int>& k) {
  return std::all_of(k.begin(), k.end(), [](int c) { return c == 0; });
}

}  // namespace

PeriodicOperator::Builder::Builder(int dim) : dim_(dim) {
  require(dim >= 1 && dim <= 3, "PeriodicOperator: dimension must be 1, 2 or 3");
}

PeriodicOperator::Builder& PeriodicOperator::Builder::metric(const VectorXi& n,
                                                             const MatrixXcd& a) {
  require(n.size() == dim_, "metric coefficient index has wrong dimension");
  require(a.rows() == dim_ && a.cols() == dim_, "metric coefficient must be d x d");
  metric_[key_of(n)] = a;
  return *this;
}

PeriodicOperator::Builder& PeriodicOperator::Builder::potential(const VectorXi& n, cxd v) {
  require(n.size() == dim_, "potential coefficient index has wrong dimension");
  potential_[key_of(n)] = v;
  return *this;
}

PeriodicOperator::Builder& PeriodicOperator::Builder::ellipticity_floor(double theta) {
  floor_ = theta;
  return *this;
}

PeriodicOperator PeriodicOperator::Builder::assemble(bool validate) const {
  PeriodicOperator op;
  op.dim_ = dim_;

  auto metric = metric_;
  auto potential = potential_;

  // complete conjugate partners: A_{-n} = conj(A_n), V_{-n} = conj(V_n)
  for (const auto& [k, a] : metric_) {
    const auto nk = negate(k);
    auto it = metric.find(nk);
    if (it == metric.end()) {
      metric[nk] = a.conjugate();
    } else if (validate) {
      require((it->second - a.conjugate()).cwiseAbs().maxCoeff() <= 1e-14,
              "metric coefficients violate A_{-n} = conj(A_n)");
    }
  }
  for (const auto& [k, v] : potential_) {
    const auto nk = negate(k);
    auto it = potential.find(nk);
    if (it == potential.end()) {
      potential[nk] = std::conj(v);
    } else if (validate) {
      require(std::abs(it->second - std::conj(v)) <= 1e-14,
              "potential coefficients violate V_{-n} = conj(V_n)");
    }
  }
  if (metric.find(std::vector<int>(dim_, 0)) == metric.end()) {
    metric[std::vector<int>(dim_, 0)] = MatrixXcd::Identity(dim_, dim_);
  }

  op.reach_ = 0;
  for (const auto& [k, a] : metric) {
    if (validate) {
      require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-14,
              "metric coefficient matrix must be symmetric (A^{pq} = A^{qp})");
    }
    if ((a.cwiseAbs().maxCoeff() == 0.0) && !is_zero_key(k)) continue;
    op.metric_.push_back({vec_of(k), a});
    for (int c : k) op.reach_ = std::max(op.reach_, std::abs(c));
  }
  for (const auto& [k, v] : potential) {
    if (v == cxd(0.0, 0.0)) continue;
    op.potential_.push_back({vec_of(k), v});
    for (int c : k) op.reach_ = std::max(op.reach_, std::abs(c));
  }

  op.mean_metric_ = MatrixXcd::Identity(dim_, dim_);
  for (const auto& mc : op.metric_)
    if (mc.n.isZero()) op.mean_metric_ = mc.a;
  op.mean_potential_ = 0.0;
  for (const auto& pc : op.potential_)
    if (pc.n.isZero()) op.mean_potential_ = pc.v.real();

  // sampled ellipticity over a fixed spatial grid
  double sampled_min = std::numeric_limits<double>::infinity();
  if (validate) {
    const int g = 16;
    int npts = 1;
    for (int j = 0; j < dim_; ++j) npts *= g;
    for (int i = 0; i < npts; ++i) {
      VectorXd x(dim_);
      int rem = i;
      for (int j = dim_ - 1; j >= 0; --j) {
        x[j] = static_cast<double>(rem % g) / g;
        rem /= g;
      }
      auto [ax, vx] = op.evaluate_coefficients(x);
      (void)vx;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(ax, Eigen::EigenvaluesOnly);
      sampled_min = std::min(sampled_min, es.eigenvalues().minCoeff());
    }
    const double floor = floor_ > 0 ? floor_ : 0.5 * sampled_min;
    require(floor > 0.0 && sampled_min >= floor - 1e-12,
            "operator is not elliptic: sampled min eigenvalue of A(x) is " +
                format_g17(sampled_min));
    op.ellipticity_floor_ = floor;
  } else {
    op.ellipticity_floor_ = floor_ > 0 ? floor_ : 1.0;
  }
  return op;
}

PeriodicOperator PeriodicOperator::Builder::build() const { return assemble(true); }
PeriodicOperator PeriodicOperator::Builder::build_unchecked() const { return assemble(false); }

const MatrixXcd* PeriodicOperator::metric_at(const VectorXi& n) const {
  for (const auto& mc : metric_)
    if (mc.n == n) return &mc.a;
  return nullptr;
}

cxd PeriodicOperator::potential_at(const VectorXi& n) const {
  for (const auto& pc : potential_)
    if (pc.n == n) return pc.v;
  return {0.0, 0.0};
}

std::pair<MatrixXd, double> PeriodicOperator::evaluate_coefficients(const VectorXd& x) const {
  require(x.size() == dim_, "evaluate_coefficients: point has wrong dimension");
  MatrixXcd a = MatrixXcd::Zero(dim_, dim_);
  for (const auto& mc : metric_) {
    const double phase = kTwoPi * mc.n.cast<double>().dot(x);
    a += mc.a * std::polar(1.0, phase);
  }
  cxd v{0.0, 0.0};
  for (const auto& pc : potential_) {
    const double phase = kTwoPi * pc.n.cast<double>().dot(x);
    v += pc.v * std::polar(1.0, phase);
  }
  const double scale_a = 1.0 + a.cwiseAbs().maxCoeff();
  const double scale_v = 1.0 + std::abs(v);
  require(a.imag().cwiseAbs().maxCoeff() <= 1e-12 * scale_a,
          "A(x) has imaginary residue: corrupted metric coefficients");
  require(std::abs(v.imag()) <= 1e-12 * scale_v,
          "V(x) has imaginary residue: corrupted potential coefficients");
  return {a.real(), v.real()};
}

std::string PeriodicOperator::content_hash() const {
  Fnv1a h;
  h.i64(dim_);
  h.f64(ellipticity_floor_);
  h.i64(static_cast<std::int64_t>(metric_.size()));
  for (const auto& mc : metric_) {
    for (int j = 0; j < dim_; ++j) h.i64(mc.n[j]);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) {
        h.f64(mc.a(r, c).real());
        h.f64(mc.a(r, c).imag());
      }
  }
  h.i64(static_cast<std::int64_t>(potential_.size()));
  for (const auto& pc : potential_) {
    for (int j = 0; j < dim_; ++j) h.i64(pc.n[j]);
    h.f64(pc.v.real());
    h.f64(pc.v.imag());
  }
  return h.hex();
}

PeriodicOperator PeriodicOperator::free_laplacian(int dim) {
  return Builder(dim).ellipticity_floor(1.0).build();
}

PeriodicOperator PeriodicOperator::mathieu_1d(double q) {
  VectorXi n(1);
  n[0] = 1;
  return Builder(1).potential(n, cxd(q, 0.0)).ellipticity_floor(1.0).build();
}

PeriodicOperator PeriodicOperator::separable_mathieu(int dim, double q) {
  Builder b(dim);
  for (int j = 0; j < dim; ++j) {
    VectorXi n = VectorXi::Zero(dim);
    n[j] = 1;
    b.potential(n, cxd(q, 0.0));
  }
  return b.ellipticity_floor(1.0).build();
}

namespace {

cxd complex_from_kv(const KvValue& v) {
  if (v.is_number()) return {v.as_double(), 0.0};
  const auto& a = v.as_array();
  require(a.size() == 2, "complex value must be a number or [re, im]");
  return {a[0].as_double(), a[1].as_double()};
}

KvValue complex_to_kv(cxd v) {
  if (v.imag() == 0.0) return KvValue::of_float(v.real());
  return KvValue::of_array({KvValue::of_float(v.real()), KvValue::of_float(v.imag())});
}

VectorXi index_from_kv(const KvValue& v, int dim) {
  const auto& a = v.as_array();
  require(static_cast<int>(a.size()) == dim, "index has wrong dimension");
  VectorXi n(dim);
  for (int j = 0; j < dim; ++j) n[j] = static_cast<int>(a[j].as_int());
  return n;
}

}  // namespace

PeriodicOperator operator_from_kv(const KvTable& t) {
  if (const KvValue* sv = t.find("schema_version"))
    require(sv->as_int() == 1, "unsupported operator schema_version");
  const int dim = static_cast<int>(t.at("dimension").as_int());
  PeriodicOperator::Builder b(dim);
  if (const KvValue* fl = t.find("ellipticity_floor")) b.ellipticity_floor(fl->as_double());
  if (const KvValue* mv = t.find("metric")) {
    for (const auto& item : mv->as_array()) {
      const KvTable& mt = item.as_table();
      VectorXi n = index_from_kv(mt.at("index"), dim);
      const auto& rows = mt.at("matrix").as_array();
      require(static_cast<int>(rows.size()) == dim, "metric matrix has wrong size");
      MatrixXcd a(dim, dim);
      for (int r = 0; r < dim; ++r) {
        const auto& row = rows[r].as_array();
        require(static_cast<int>(row.size()) == dim, "metric matrix has wrong size");
        for (int c = 0; c < dim; ++c) a(r, c) = complex_from_kv(row[c]);
      }
      b.metric(n, a);
    }
  }
  if (const KvValue* pv = t.find("potential")) {
    for (const auto& item : pv->as_array()) {
      const KvTable& pt = item.as_table();
      b.potential(index_from_kv(pt.at("index"), dim), complex_from_kv(pt.at("value")));
    }
  }
  return b.build();
}

KvTable operator_to_kv(const PeriodicOperator& op) {
  KvTable t;
  t.insert("schema_version", KvValue::of_int(1));
  t.insert("dimension", KvValue::of_int(op.dim()));
  t.insert("ellipticity_floor", KvValue::of_float(op.ellipticity_floor()));
  std::vector<KvValue> metric;
  for (const auto& mc : op.metric_coeffs()) {
    KvTable mt;
    std::vector<KvValue> idx;
    for (int j = 0; j < op.dim(); ++j) idx.push_back(KvValue::of_int(mc.n[j]));
    mt.insert("index", KvValue::of_array(std::move(idx)));
    std::vector<KvValue> rows;
    for (int r = 0; r < op.dim(); ++r) {
      std::vector<KvValue> row;
      for (int c = 0; c < op.dim(); ++c) row.push_back(complex_to_kv(mc.a(r, c)));
      rows.push_back(KvValue::of_array(std::move(row)));
    }
    mt.insert("matrix", KvValue::of_array(std::move(rows)));
    metric.push_back(KvValue::of_table(std::move(mt)));
  }
  if (!metric.empty()) t.insert("metric", KvValue::of_array(std::move(metric)));
  std::vector<KvValue> pot;
  for (const auto& pc : op.potential_coeffs()) {
    KvTable pt;
    std::vector<KvValue> idx;
    for (int j = 0; j < op.dim(); ++j) idx.push_back(KvValue::of_int(pc.n[j]));
    pt.insert("index", KvValue::of_array(std::move(idx)));
    pt.insert("value", complex_to_kv(pc.v));
    pot.push_back(KvValue::of_table(std::move(pt)));
  }
  if (!pot.empty()) t.insert("potential", KvValue::of_array(std::move(pot)));
  return t;
}

PeriodicOperator load_operator_file(const std::string& path) {
  auto text = read_file(path);
  require(text.has_value(), "cannot read operator file: " + path);
  return operator_from_kv(parse_kv(*text));
}

}  // namespace gapasym
