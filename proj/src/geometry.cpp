#include <lorhol/geometry.hpp>

#include <lorhol/errors.hpp>
#include <lorhol/random.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lorhol {

namespace {

std::string format_point(const Vec& p) {
  std::ostringstream os;
  os.precision(10);
  os << '(';
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

std::span<const double> as_span(const Vec& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

}  // namespace

Identification Identification::translation(const Vec& offset) {
  Identification id;
  id.kind = Kind::Translation;
  id.matrix = Mat::Identity(offset.size(), offset.size());
  id.offset = offset;
  return id;
}

Identification Identification::linear(const Mat& matrix, const Vec& offset) {
  Identification id;
  id.kind = Kind::Linear;
  id.matrix = matrix;
  id.offset = offset;
  return id;
}

Vec Identification::apply_inverse(const Vec& x) const {
  return matrix.partialPivLu().solve(Vec(x - offset));
}

ChartMetric::ChartMetric(std::string name, std::vector<std::string> coords,
                         std::vector<Expr> upper, std::vector<Interval> domain,
                         std::vector<Interval> box, std::vector<Identification> identifications,
                         std::vector<Expr> time_orientation)
    : name_(std::move(name)),
      dim_(static_cast<int>(coords.size())),
      coords_(std::move(coords)),
      domain_(std::move(domain)),
      box_(std::move(box)),
      identifications_(std::move(identifications)),
      time_orientation_(std::move(time_orientation)) {
  const auto n = static_cast<std::size_t>(dim_);
  if (dim_ < 2 || dim_ > kMaxDim)
    throw InputError("metric '" + name_ + "': dimension must be between 2 and 6");
  if (upper.size() != n * (n + 1) / 2)
    throw InputError("metric '" + name_ + "': expected " + std::to_string(n * (n + 1) / 2) +
                     " upper-triangle components, got " + std::to_string(upper.size()));
  if (domain_.size() != n || box_.size() != n)
    throw InputError("metric '" + name_ + "': domain and box need one interval per coordinate");
  if (time_orientation_.size() != n)
    throw InputError("metric '" + name_ + "': time orientation needs one expression per coordinate");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(domain_[i].lo < domain_[i].hi))
      throw InputError("metric '" + name_ + "': empty domain interval for " + coords_[i]);
    if (!box_[i].bounded() || !(box_[i].lo < box_[i].hi))
      throw InputError("metric '" + name_ + "': working box must be bounded and nonempty for " +
                       coords_[i]);
    if (box_[i].lo < domain_[i].lo || box_[i].hi > domain_[i].hi)
      throw InputError("metric '" + name_ + "': working box exceeds domain for " + coords_[i]);
  }
  for (const auto& id : identifications_)
    if (id.matrix.rows() != dim_ || id.matrix.cols() != dim_ || id.offset.size() != dim_)
      throw InputError("metric '" + name_ + "': identification has wrong shape");

  components_.resize(n * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      components_[i * n + j] = upper[k];
      components_[j * n + i] = upper[k];
      ++k;
    }

  default_point_.resize(dim_);
  for (int i = 0; i < dim_; ++i) default_point_[i] = 0.5 * (box_[i].lo + box_[i].hi);
}

void ChartMetric::set_default_point(const Vec& p) {
  if (p.size() != dim_ || !in_box(p))
    throw InputError("metric '" + name_ + "': default point outside the working box");
  default_point_ = p;
}

ChartMetric ChartMetric::without_identifications(std::string new_name) const {
  ChartMetric copy = *this;
  copy.name_ = std::move(new_name);
  copy.identifications_.clear();
  return copy;
}

bool ChartMetric::in_domain(const Vec& p) const {
  if (p.size() != dim_) return false;
  for (int i = 0; i < dim_; ++i) {
    const auto& iv = domain_[static_cast<std::size_t>(i)];
    // Domain intervals are open.
    if (!(p[i] > iv.lo && p[i] < iv.hi)) return false;
  }
  return true;
}

bool ChartMetric::in_box(const Vec& p) const {
  if (p.size() != dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (!box_[static_cast<std::size_t>(i)].contains(p[i])) return false;
  return true;
}

void ChartMetric::require_domain(const Vec& p) const {
  if (!in_domain(p))
    throw OutsideDomain("point " + format_point(p) + " outside the domain of '" + name_ + "'");
}

double Christoffel::max_abs() const {
  double m = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m = std::max(m, std::abs((*this)(k, i, j)));
  return m;
}

Mat Riemann::endomorphism(int i, int j) const {
  Mat m(n, n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) m(l, k) = (*this)(l, k, i, j);
  return m;
}

Vec Riemann::apply(const Vec& x, const Vec& y, const Vec& z) const {
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += (*this)(l, k, i, j) * z[k] * x[i] * y[j];
    out[l] = s;
  }
  return out;
}

Mat metric_at(const ChartMetric& g, const Vec& p) {
  g.require_domain(p);
  const int n = g.dim();
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = eval(g.component(i, j), as_span(p));
  return m;
}

MetricJet1 metric_jet1(const ChartMetric& g, const Vec& p) {
  g.require_domain(p);
  const int n = g.dim();
  MetricJet1 jet;
  jet.g.resize(n, n);
  for (int m = 0; m < n; ++m) jet.dg[m].resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Expr& e = g.component(i, j);
      if (e.root().kind == NodeKind::Constant) {
        jet.g(i, j) = jet.g(j, i) = e.root().value;
        for (int m = 0; m < n; ++m) jet.dg[m](i, j) = jet.dg[m](j, i) = 0.0;
        continue;
      }
      const Jet1 v = eval_jet1(e, as_span(p));
      jet.g(i, j) = jet.g(j, i) = v.value;
      for (int m = 0; m < n; ++m) jet.dg[m](i, j) = jet.dg[m](j, i) = v.grad[m];
    }
  return jet;
}

MetricJet2 metric_jet2(const ChartMetric& g, const Vec& p) {
  g.require_domain(p);
  const int n = g.dim();
  MetricJet2 jet;
  jet.g.resize(n, n);
  for (int m = 0; m < n; ++m) {
    jet.dg[m].resize(n, n);
    for (int q = 0; q < n; ++q) jet.ddg[m][q].resize(n, n);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Jet2 v = eval_jet2(g.component(i, j), as_span(p));
      jet.g(i, j) = jet.g(j, i) = v.value;
      for (int m = 0; m < n; ++m) {
        jet.dg[m](i, j) = jet.dg[m](j, i) = v.grad[m];
        for (int q = 0; q < n; ++q) jet.ddg[m][q](i, j) = jet.ddg[m][q](j, i) = v.hess(m, q);
      }
    }
  return jet;
}

Mat checked_inverse(const Mat& g) {
  const auto lu = g.fullPivLu();
  if (!lu.isInvertible()) throw SingularMetric("metric is singular");
  Mat inv = lu.inverse();
  const double cond = g.cwiseAbs().colwise().sum().maxCoeff() *
                      inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!(cond <= kConditionLimit))
    throw SingularMetric("metric condition number " + std::to_string(cond) + " exceeds 1e12");
  return inv;
}

Christoffel christoffel_from_jet(const MetricJet1& jet) {
  const int n = static_cast<int>(jet.g.rows());
  const Mat inv = checked_inverse(jet.g);
  // Lowered symbols Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il - ∂_l g_ij).
  std::array<double, kMaxDim * kMaxDim * kMaxDim> low{};
  auto li = [](int l, int i, int j) { return static_cast<std::size_t>((l * kMaxDim + i) * kMaxDim + j); };
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
        low[li(l, i, j)] = low[li(l, j, i)] = v;
      }
  Christoffel c;
  c.n = n;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += inv(k, l) * low[li(l, i, j)];
        c(k, i, j) = c(k, j, i) = s;
      }
  return c;
}

Christoffel christoffel_at(const ChartMetric& g, const Vec& p) {
  return christoffel_from_jet(metric_jet1(g, p));
}

Riemann riemann_at(const ChartMetric& g, const Vec& p) {
  const MetricJet2 jet = metric_jet2(g, p);
  const int n = g.dim();
  const Mat inv = checked_inverse(jet.g);

  MetricJet1 j1;
  j1.g = jet.g;
  j1.dg = jet.dg;
  const Christoffel gam = christoffel_from_jet(j1);

  // dgam[m](k,i,j) = ∂_m Γ^k_{ij}
  std::vector<Christoffel> dgam(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const Mat dinv = -inv * jet.dg[m] * inv;
    Christoffel& d = dgam[static_cast<std::size_t>(m)];
    d.n = n;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            const double low = 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
            const double dlow = 0.5 * (jet.ddg[m][i](j, l) + jet.ddg[m][j](i, l) -
                                       jet.ddg[m][l](i, j));
            s += dinv(k, l) * low + inv(k, l) * dlow;
          }
          d(k, i, j) = d(k, j, i) = s;
        }
  }

  Riemann r(n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = dgam[static_cast<std::size_t>(i)](l, j, k) -
                     dgam[static_cast<std::size_t>(j)](l, i, k);
          for (int m = 0; m < n; ++m) s += gam(l, i, m) * gam(m, j, k) - gam(l, j, m) * gam(m, i, k);
          r(l, k, i, j) = s;
        }
  return r;
}

Riemann lower_riemann(const Riemann& r, const Mat& g) {
  const int n = r.n;
  Riemann low(n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int a = 0; a < n; ++a) s += g(l, a) * r(a, k, i, j);
          low(l, k, i, j) = s;
        }
  return low;
}

double sectional_curvature(const ChartMetric& g, const Vec& p, const Vec& x, const Vec& y) {
  const Mat m = metric_at(g, p);
  const Riemann r = riemann_at(g, p);
  const double area = inner(m, x, x) * inner(m, y, y) - inner(m, x, y) * inner(m, x, y);
  if (std::abs(area) < 1e-14) throw PreconditionError("plane is degenerate");
  return inner(m, r.apply(x, y, y), x) / area;
}

Vec time_orientation_at(const ChartMetric& g, const Vec& p) {
  g.require_domain(p);
  Vec t(g.dim());
  for (int i = 0; i < g.dim(); ++i)
    t[i] = eval(g.time_orientation()[static_cast<std::size_t>(i)], as_span(p));
  return t;
}

const char* to_string(CausalType t) {
  switch (t) {
    case CausalType::Timelike: return "timelike";
    case CausalType::Null: return "null";
    case CausalType::Spacelike: return "spacelike";
    case CausalType::Zero: return "zero";
  }
  return "?";
}

const char* to_string(TimeDirection d) {
  switch (d) {
    case TimeDirection::Future: return "future";
    case TimeDirection::Past: return "past";
    case TimeDirection::None: return "none";
  }
  return "?";
}

CausalClass causal_classify(const ChartMetric& g, const TangentVec& v) {
  CausalClass c;
  const double aux = v.comp.squaredNorm();
  if (aux == 0.0) return c;
  const Mat m = metric_at(g, v.base);
  const double q = inner(m, v.comp, v.comp);
  const double tol = kCausalTolerance * aux;
  if (q < -tol)
    c.type = CausalType::Timelike;
  else if (q > tol)
    c.type = CausalType::Spacelike;
  else
    c.type = CausalType::Null;
  if (c.type == CausalType::Spacelike) return c;
  const Vec t = time_orientation_at(g, v.base);
  c.direction = inner(m, v.comp, t) < 0.0 ? TimeDirection::Future : TimeDirection::Past;
  return c;
}

SignatureReport signature_check(const ChartMetric& g, int samples, std::uint64_t seed) {
  SignatureReport rep;
  rep.samples = samples;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const int n = g.dim();
  Vec p(n);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) {
      const auto& iv = g.box()[static_cast<std::size_t>(i)];
      p[i] = rng.uniform(iv.lo, iv.hi);
    }
    if (!g.in_domain(p)) continue;
    std::string failure;
    double margin = 0.0;
    try {
      const Mat m = metric_at(g, p);
      const Eigen::SelfAdjointEigenSolver<Mat> es(m);
      const auto& ev = es.eigenvalues();
      const double scale = ev.cwiseAbs().maxCoeff();
      int negatives = 0;
      for (int i = 0; i < n; ++i)
        if (ev[i] < 0) ++negatives;
      margin = scale > 0 ? ev.cwiseAbs().minCoeff() / scale : 0.0;
      const Vec t = time_orientation_at(g, p);
      if (negatives != 1)
        failure = std::to_string(negatives) + " negative eigenvalues";
      else if (margin < 1.0 / kConditionLimit)
        failure = "metric degenerate";
      else if (!(inner(m, t, t) < 0.0))
        failure = "time orientation not timelike";
    } catch (const Error& e) {
      failure = e.what();
    }
    if (!failure.empty()) {
      if (rep.failures == 0) {
        rep.worst_point = p;
        rep.message = failure + " at " + format_point(p);
      }
      ++rep.failures;
      rep.ok = false;
      rep.worst_margin = 0.0;
      continue;
    }
    if (rep.failures == 0 && margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_point = p;
    }
  }
  return rep;
}

double identification_deviation(const ChartMetric& g, const Identification& id, int per_axis) {
  const int n = g.dim();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  double worst = 0.0;
  Vec x(n);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    for (int i = 0; i < n; ++i) {
      const auto& iv = g.box()[static_cast<std::size_t>(i)];
      const long k = rest % per_axis;
      rest /= per_axis;
      x[i] = iv.lo + (iv.hi - iv.lo) * (static_cast<double>(k) + 0.5) / per_axis;
    }
    const Vec y = id.apply(x);
    if (!g.in_domain(x) || !g.in_domain(y)) continue;
    const Mat pulled = id.matrix.transpose() * metric_at(g, y) * id.matrix;
    worst = std::max(worst, (pulled - metric_at(g, x)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double metricity_residual(const ChartMetric& g, const Vec& p) {
  const MetricJet1 jet = metric_jet1(g, p);
  const Christoffel c = christoffel_from_jet(jet);
  const int n = g.dim();
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = jet.dg[k](i, j);
        for (int l = 0; l < n; ++l) s -= c(l, k, i) * jet.g(l, j) + c(l, k, j) * jet.g(i, l);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

}  // namespace lorhol
