#include <lorhol/deformation.hpp>

#include <lorhol/errors.hpp>
#include <lorhol/parallel.hpp>
#include <lorhol/random.hpp>
#include <lorhol/transport.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lorhol {

namespace {

constexpr double kBoundUlps = 8.0 * std::numeric_limits<double>::epsilon();

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec spatial_part(const Vec& p) { return p.tail(p.size() - 1); }

Vec random_spatial_point(const DeformationFamily& fam, Rng& rng) {
  Vec x(fam.dim() - 1);
  for (int a = 0; a < x.size(); ++a)
    x[a] = rng.uniform(fam.s_box[static_cast<std::size_t>(a)].lo, fam.s_box[static_cast<std::size_t>(a)].hi);
  return x;
}

// A ḡ-unit direction with normally distributed components before scaling.
Vec random_unit(const Mat& sg, Rng& rng) {
  Vec d(sg.rows());
  for (int a = 0; a < d.size(); ++a) d[a] = rng.normal();
  return d / std::sqrt(inner(sg, d, d));
}

double alpha_norm(const Mat& sg, const Vec& alpha) {
  return std::sqrt(alpha.dot(checked_inverse(sg) * alpha));
}

}  // namespace

Mat DeformationFamily::s_metric_at(const Vec& x) const {
  const int m = dim() - 1;
  const auto p = to_std(x);
  Mat out(m, m);
  std::size_t k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) out(i, j) = out(j, i) = eval(s_metric[k++], p);
  return out;
}

Vec DeformationFamily::alpha_at(const Vec& x) const {
  const auto p = to_std(x);
  Vec out(dim() - 1);
  for (int a = 0; a < out.size(); ++a) out[a] = eval(alpha[static_cast<std::size_t>(a)], p);
  return out;
}

DeformationFamily make_deformation_family(std::string name, std::vector<std::string> s_coords,
                                          const std::vector<std::string>& s_metric_upper,
                                          const std::vector<std::string>& alpha,
                                          std::vector<Interval> s_domain, std::vector<Interval> s_box,
                                          Interval t_box, int samples, std::uint64_t seed) {
  const std::size_t m = s_coords.size();
  if (m < 1 || m + 1 > static_cast<std::size_t>(kMaxDim))
    throw InputError("deformation needs between 1 and 5 spatial coordinates");
  if (s_metric_upper.size() != m * (m + 1) / 2)
    throw InputError("spatial metric needs " + std::to_string(m * (m + 1) / 2) + " upper-triangle components");
  if (alpha.size() != m) throw InputError("alpha needs " + std::to_string(m) + " components");
  if (s_domain.size() != m || s_box.size() != m) throw InputError("spatial domain and box need one interval per coordinate");
  for (const auto& iv : s_box)
    if (!iv.bounded() || !(iv.lo < iv.hi)) throw InputError("spatial box must be bounded and nonempty");
  if (!t_box.bounded() || !(t_box.lo < t_box.hi)) throw InputError("time box must be bounded and nonempty");
  for (const auto& c : s_coords)
    if (c == "t") throw InputError("spatial coordinates may not be named t");

  DeformationFamily fam;
  fam.name = std::move(name);
  fam.s_coords = std::move(s_coords);
  for (const auto& s : s_metric_upper) fam.s_metric.push_back(parse_expr(s, fam.s_coords));
  for (const auto& s : alpha) fam.alpha.push_back(parse_expr(s, fam.s_coords));
  fam.s_domain = std::move(s_domain);
  fam.s_box = std::move(s_box);
  fam.t_box = t_box;

  Rng rng(seed);
  fam.min_s_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const Vec x = random_spatial_point(fam, rng);
    const Mat sg = fam.s_metric_at(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sg), Eigen::EigenvaluesOnly);
    fam.min_s_eigenvalue = std::min(fam.min_s_eigenvalue, es.eigenvalues()[0]);
    if (!(es.eigenvalues()[0] > 0.0)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "spatial metric is not positive definite at sample %d", k);
      throw PreconditionError(buf);
    }
    const Vec a = fam.alpha_at(x);
    if (!a.allFinite()) throw PreconditionError("alpha is not finite on the spatial box");
    fam.sup_alpha = std::max(fam.sup_alpha, alpha_norm(sg, a));
  }
  return fam;
}

DeformationFamily flat_deformation_family(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", a);
  return make_deformation_family("flat_alpha_dx", {"x", "y"}, {"1", "0", "1"}, {buf, "0"},
                                 {Interval{}, Interval{}}, {{-2.0, 2.0}, {-2.0, 2.0}}, {-2.0, 2.0});
}

ChartMetric build_deformation(const DeformationFamily& fam, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw InputError("deformation parameter r must lie in [0, 1]");
  const int n = fam.dim();
  const int m = n - 1;
  std::vector<std::string> coords{fam.time_name};
  coords.insert(coords.end(), fam.s_coords.begin(), fam.s_coords.end());
  std::vector<int> shift(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) shift[static_cast<std::size_t>(a)] = a + 1;
  auto lift = [&](const Expr& e) { return remap_variables(e, shift, coords); };

  const bool alpha_zero = std::all_of(fam.alpha.begin(), fam.alpha.end(),
                                      [](const Expr& e) { return e.is_zero_literal(); });
  std::vector<Expr> alpha;
  for (const auto& e : fam.alpha) alpha.push_back(lift(e));

  std::vector<Expr> upper;
  upper.push_back(r == 1.0 ? Expr() : Expr::constant(-(1.0 - r)));
  for (int a = 0; a < m; ++a)
    upper.push_back(r == 0.0 || fam.alpha[static_cast<std::size_t>(a)].is_zero_literal()
                        ? Expr()
                        : Expr::constant(r) * alpha[static_cast<std::size_t>(a)]);
  for (const auto& e : fam.s_metric) upper.push_back(lift(e));

  // Time orientation ∂_t - r (s/q) α_E with s = Σ α_a², q = ḡ(α_E, α_E); it is
  // c(r)-timelike wherever r < 1 or α ≠ 0.
  std::vector<Expr> orientation{Expr::constant(1.0)};
  if (alpha_zero || r == 0.0) {
    for (int a = 0; a < m; ++a) orientation.emplace_back();
  } else {
    Expr s;
    for (int a = 0; a < m; ++a) s = s + alpha[static_cast<std::size_t>(a)] * alpha[static_cast<std::size_t>(a)];
    Expr q;
    std::size_t k = 0;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        const Expr gij = lift(fam.s_metric[k++]);
        const Expr term = gij * alpha[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(j)];
        q = q + (i == j ? term : Expr::constant(2.0) * term);
      }
    const Expr factor = Expr::constant(r) * s / q;
    for (int a = 0; a < m; ++a) orientation.push_back(-(factor * alpha[static_cast<std::size_t>(a)]));
  }

  std::vector<Interval> domain{Interval{}};
  domain.insert(domain.end(), fam.s_domain.begin(), fam.s_domain.end());
  std::vector<Interval> box{fam.t_box};
  box.insert(box.end(), fam.s_box.begin(), fam.s_box.end());

  char name[96];
  std::snprintf(name, sizeof name, "%s_r%.6g", fam.name.c_str(), r);
  return ChartMetric(name, std::move(coords), std::move(upper), std::move(domain), std::move(box), {},
                     std::move(orientation));
}

double causal_speed_bound(double r, double alpha_norm) {
  return r * alpha_norm + std::sqrt(r * r * alpha_norm * alpha_norm + (1.0 - r));
}

Vec gradient_of_t(const Mat& c) { return checked_inverse(c).col(0); }

// ---------------------------------------------------------------------------

GradientCheck gradient_parallel_check(const DeformationFamily& fam, double r, const GridSpec& grid) {
  const ChartMetric c = build_deformation(fam, r);
  const int n = c.dim();
  std::vector<std::vector<double>> values;
  for (int a = 0; a < n; ++a) values.push_back(grid.axis_values(c, a));
  const long m = static_cast<long>(values.front().size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= m;

  struct NodeResult {
    double residual, norm, killing;
  };
  std::vector<NodeResult> results(static_cast<std::size_t>(total));
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t idx) {
    Vec p(n);
    long rem = static_cast<long>(idx);
    for (int a = n - 1; a >= 0; --a) {
      p[a] = values[static_cast<std::size_t>(a)][static_cast<std::size_t>(rem % m)];
      rem /= m;
    }
    const MetricJet1 jet = metric_jet1(c, p);
    const Mat inv = checked_inverse(jet.g);
    const Vec x = inv.col(0);
    const Christoffel gamma = christoffel_from_jet(jet);
    double residual = 0.0, killing = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec dx = -(inv * (jet.dg[static_cast<std::size_t>(i)] * x));
      for (int k = 0; k < n; ++k) {
        double cov = dx[k];
        for (int j = 0; j < n; ++j) cov += gamma(k, i, j) * x[j];
        residual = std::max(residual, std::abs(cov));
        killing = std::max(killing, std::abs(gamma(k, i, 0)));
      }
    }
    results[idx] = {residual, inner(jet.g, x, x), killing};
  });

  GradientCheck out;
  out.nodes = static_cast<int>(total);
  out.killing_norm = -(1.0 - r);
  out.min_grad_norm = std::numeric_limits<double>::infinity();
  out.max_grad_norm = -std::numeric_limits<double>::infinity();
  for (const auto& nr : results) {
    out.residual = std::max(out.residual, nr.residual);
    out.killing_residual = std::max(out.killing_residual, nr.killing);
    out.min_grad_norm = std::min(out.min_grad_norm, nr.norm);
    out.max_grad_norm = std::max(out.max_grad_norm, nr.norm);
  }
  return out;
}

SpeedBoundCheck causal_speed_bound_check(const DeformationFamily& fam, double r, int trials,
                                         std::uint64_t seed) {
  if (trials < 1) throw InputError("need at least one trial");
  const ChartMetric c = build_deformation(fam, r);
  const int n = c.dim();
  Rng rng(seed);
  SpeedBoundCheck out;
  out.trials = trials;
  out.min_pairing = std::numeric_limits<double>::infinity();
  out.max_causal_defect = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    Vec p(n);
    p[0] = rng.uniform(fam.t_box.lo, fam.t_box.hi);
    p.tail(n - 1) = random_spatial_point(fam, rng);
    const Vec x = spatial_part(p);
    const Mat sg = fam.s_metric_at(x);
    const Vec a = fam.alpha_at(x);
    const Vec d = random_unit(sg, rng);

    // c((1, ρd), (1, ρd)) = ρ² + 2rα(d)ρ - (1-r) <= 0  ⇔  ρ in [ρ_-, ρ_+].
    const double ad = a.dot(d);
    const double disc = std::sqrt(r * r * ad * ad + (1.0 - r));
    const double hi = -r * ad + disc;
    const double lo = std::max(0.0, -r * ad - disc);
    if (hi < lo) continue;
    // A quarter of the samples sit on the null cone, where the bound is tight.
    const double rho = rng.below(4) == 0 ? hi : lo + (hi - lo) * rng.uniform();

    Vec v(n);
    v[0] = 1.0;
    v.tail(n - 1) = rho * d;
    const Mat g = metric_at(c, p);
    const double vv = inner(g, v, v);
    out.max_causal_defect = std::max(out.max_causal_defect, vv);

    const double w_norm = std::sqrt(inner(sg, v.tail(n - 1), v.tail(n - 1)));
    const double bound = causal_speed_bound(r, alpha_norm(sg, a));
    // Null samples meet the bound with equality; allow a few ulps of rounding.
    out.max_violation = std::max(out.max_violation, w_norm - bound * (1.0 + kBoundUlps));
    out.max_ratio = std::max(out.max_ratio, w_norm / bound);

    const CausalClass cls = causal_classify(c, TangentVec{p, v});
    if (cls.direction == TimeDirection::Past) ++out.past_directed;
    out.min_pairing = std::min(out.min_pairing, inner(g, gradient_of_t(g), v));
  }
  out.max_violation = std::max(out.max_violation, 0.0);
  return out;
}

ConservationCheck geodesic_conservation_check(const DeformationFamily& fam, double r, int trials,
                                              std::uint64_t seed, double span) {
  if (trials < 1) throw InputError("need at least one trial");
  const ChartMetric c = build_deformation(fam, r);
  const int n = c.dim();

  struct Start {
    Vec p, v;
  };
  Rng rng(seed);
  std::vector<Start> starts;
  for (int k = 0; k < trials; ++k) {
    Vec p(n);
    p[0] = rng.uniform(fam.t_box.lo, fam.t_box.hi);
    p.tail(n - 1) = random_spatial_point(fam, rng);
    Vec v(n);
    for (int a = 0; a < n; ++a) v[a] = rng.normal();
    starts.push_back({p, v});
  }

  struct TrialResult {
    double drift = 0.0, killing = 0.0, energy = 0.0;
    bool completed = false;
    std::string failure;
  };
  std::vector<TrialResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t k) {
    const auto& st = starts[k];
    const GeodesicResult geo = integrate_geodesic(c, st.p, TangentVec{st.p, st.v}, span);
    TrialResult& tr = results[k];
    tr.completed = geo.outcome == GeodesicOutcome::Completed;
    if (!tr.completed) tr.failure = std::string(to_string(geo.outcome)) + ": " + geo.reason;
    tr.energy = geo.energy_drift;
    const Mat g0 = metric_at(c, st.p);
    const Vec grad0 = gradient_of_t(g0);
    const double q0 = inner(g0, grad0, st.v);
    const double k0 = (g0 * st.v)[0];
    const double scale = std::max({std::abs(q0), std::abs(k0), st.v.norm()});
    for (const auto& smp : geo.samples) {
      const Mat g = metric_at(c, smp.x);
      tr.drift = std::max(tr.drift, std::abs(inner(g, gradient_of_t(g), smp.v) - q0) / scale);
      tr.killing = std::max(tr.killing, std::abs((g * smp.v)[0] - k0) / scale);
    }
  });

  ConservationCheck out;
  out.trials = trials;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& tr = results[k];
    out.max_drift = std::max(out.max_drift, tr.drift);
    out.max_killing_drift = std::max(out.max_killing_drift, tr.killing);
    out.max_energy_drift = std::max(out.max_energy_drift, tr.energy);
    if (tr.completed)
      ++out.completed;
    else
      out.failures.push_back("trial " + std::to_string(k) + " " + tr.failure);
  }
  return out;
}

// ---------------------------------------------------------------------------

SupportDiff compact_support_diff(const ChartMetric& g1, const ChartMetric& g2,
                                 const std::vector<Interval>& core_box, const GridSpec& grid) {
  const int n = g1.dim();
  if (g2.dim() != n || g1.coords() != g2.coords())
    throw InputError("metrics live on different charts: " + g1.name() + " vs " + g2.name());
  if (static_cast<int>(core_box.size()) != n) throw InputError("core box has the wrong dimension");

  std::vector<std::vector<double>> values;
  for (int a = 0; a < n; ++a) values.push_back(grid.axis_values(g1, a));
  const long m = static_cast<long>(values.front().size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= m;

  SupportDiff out;
  out.worst_point = Vec::Zero(n);
  for (long idx = 0; idx < total; ++idx) {
    Vec p(n);
    long rem = idx;
    bool inside = true;
    for (int a = n - 1; a >= 0; --a) {
      p[a] = values[static_cast<std::size_t>(a)][static_cast<std::size_t>(rem % m)];
      rem /= m;
      if (!core_box[static_cast<std::size_t>(a)].contains(p[a])) inside = false;
    }
    g1.require_domain(p);
    g2.require_domain(p);
    const double diff = (metric_at(g1, p) - metric_at(g2, p)).cwiseAbs().maxCoeff();
    if (inside) {
      out.sup_inside = std::max(out.sup_inside, diff);
      continue;
    }
    ++out.nodes_outside;
    if (out.nodes_outside == 1 || diff > out.sup_outside) {
      out.sup_outside = diff;
      out.worst_point = p;
    }
  }
  out.compact_support = out.sup_outside < kSupportTolerance;
  return out;
}

}  // namespace lorhol
