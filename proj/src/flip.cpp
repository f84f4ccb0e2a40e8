#include <lorhol/flip.hpp>

#include <lorhol/errors.hpp>
#include <lorhol/parallel.hpp>
#include <lorhol/transport.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lorhol {

namespace {

constexpr double kStepsPerUnit = 256.0;
constexpr int kShortLegSteps = 4;

std::string format_point(const Vec& p) {
  std::string out = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", p[i]);
    out += buf;
  }
  return out + ")";
}

long nearest_node(const ParallelField& f, const ChartMetric& g, const Vec& p) {
  const int n = g.dim();
  const int m = f.grid.per_axis;
  std::vector<int> multi(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    if (m <= 1) continue;
    const Interval& iv = (f.grid.box.empty() ? g.box() : f.grid.box)[static_cast<std::size_t>(a)];
    const double t = (p[a] - iv.lo) / (iv.hi - iv.lo) * (m - 1);
    multi[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(std::lround(t)), 0, m - 1);
  }
  return f.node_index(multi);
}

}  // namespace

VectorField sampled_field(const ChartMetric& g, std::shared_ptr<const ParallelField> field) {
  return [g, field](const Vec& anchor, const Vec& at) -> Vec {
    // node -> anchor once per anchor, then a short fixed leg to `at`. The leg
    // count depends only on the anchor, so V stays smooth in `at`.
    struct Cache {
      const ParallelField* field = nullptr;
      Vec anchor;
      Vec value;
    };
    thread_local Cache cache;
    if (cache.field != field.get() || cache.anchor.size() != anchor.size() || cache.anchor != anchor) {
      const long idx = nearest_node(*field, g, anchor);
      const Vec& node = field->nodes[static_cast<std::size_t>(idx)];
      const Vec& value = field->vectors[static_cast<std::size_t>(idx)];
      const int steps = std::max(4, static_cast<int>(std::ceil(kStepsPerUnit * (anchor - node).norm())));
      cache.field = field.get();
      cache.anchor = anchor;
      cache.value = anchor == node ? value : Vec(parallel_transport_fixed(g, CurveSpec::polyline({node, anchor}), steps) * value);
    }
    if (at == anchor) return cache.value;
    return parallel_transport_fixed(g, CurveSpec::polyline({anchor, at}), kShortLegSteps) * cache.value;
  };
}

FlipMetric::FlipMetric(const ChartMetric& g, VectorField field, double fd_step)
    : g_(g), field_(std::move(field)), h_(fd_step) {}

Mat FlipMetric::metric_at(const Vec& p) const {
  const Mat g = lorhol::metric_at(g_, p);
  const Vec w = g * field_(p, p);
  return g + 2.0 * w * w.transpose();
}

Christoffel FlipMetric::christoffel_at(const Vec& p) const {
  const int n = g_.dim();
  const MetricJet1 jet = metric_jet1(g_, p);
  const Vec v = field_(p, p);
  const Vec w = jet.g * v;

  auto central = [&](int m, double h) {
    Vec plus = p, minus = p;
    plus[m] += h;
    minus[m] -= h;
    return Vec((field_(p, plus) - field_(p, minus)) / (2.0 * h));
  };

  MetricJet1 flip;
  flip.g = jet.g + 2.0 * w * w.transpose();
  for (int m = 0; m < n; ++m) {
    const Vec dv = (4.0 * central(m, h_ / 2.0) - central(m, h_)) / 3.0;
    const Vec dw = jet.dg[static_cast<std::size_t>(m)] * v + jet.g * dv;
    flip.dg[static_cast<std::size_t>(m)] =
        jet.dg[static_cast<std::size_t>(m)] + 2.0 * (dw * w.transpose() + w * dw.transpose());
  }
  return christoffel_from_jet(flip);
}

FlipMetric flip_metric(const ChartMetric& g, std::shared_ptr<const ParallelField> field) {
  if (!field || field->vectors.empty()) throw PreconditionError("empty parallel field");
  FlipDiagnostics d;
  d.parallel_residual = field->residual;
  d.nodes = static_cast<int>(field->nodes.size());
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < field->nodes.size(); ++i) {
    const Vec& p = field->nodes[i];
    const Vec& v = field->vectors[i];
    const Mat gp = metric_at(g, p);
    const double defect = std::abs(inner(gp, v, v) + 1.0);
    d.unit_defect = std::max(d.unit_defect, defect);
    if (defect > kUnitTolerance) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "V is not unit timelike: g(V,V) = %.10g at ", inner(gp, v, v));
      throw PreconditionError(buf + format_point(p));
    }
    const Vec w = gp * v;
    const Mat gr = gp + 2.0 * w * w.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(gr), Eigen::EigenvaluesOnly);
    d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues()[0]);
    d.flip_unit_defect = std::max(d.flip_unit_defect, std::abs(inner(gr, v, v) - 1.0));
  }
  if (!field->converged) throw PreconditionError("parallel field transports did not converge");
  if (!(field->residual < kParallelResidual)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "V is not parallel: path-independence residual %.3g", field->residual);
    throw PreconditionError(buf);
  }
  if (!(d.min_eigenvalue > 0.0)) throw PreconditionError("flip metric is not positive definite");
  if (d.flip_unit_defect > kUnitTolerance) throw PreconditionError("g_R(V,V) differs from 1");
  FlipMetric out(g, sampled_field(g, std::move(field)));
  out.diagnostics = d;
  return out;
}

FlipMetric flip_from_field(const ChartMetric& g, VectorField field) {
  return FlipMetric(g, std::move(field));
}

Coincidence connection_coincidence(const FlipMetric& flip, const GridSpec& grid) {
  const ChartMetric& g = flip.lorentzian();
  const int n = g.dim();
  std::vector<std::vector<double>> values;
  for (int a = 0; a < n; ++a) values.push_back(grid.axis_values(g, a));
  const long m = static_cast<long>(values.front().size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= m;

  std::vector<double> deviation(static_cast<std::size_t>(total), 0.0);
  std::vector<Vec> points(static_cast<std::size_t>(total));
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t idx) {
    Vec p(n);
    long r = static_cast<long>(idx);
    for (int a = n - 1; a >= 0; --a) {
      p[a] = values[static_cast<std::size_t>(a)][static_cast<std::size_t>(r % m)];
      r /= m;
    }
    const Christoffel a = christoffel_at(g, p);
    const Christoffel b = flip.christoffel_at(p);
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(a(k, i, j) - b(k, i, j)));
    deviation[idx] = worst;
    points[idx] = p;
  });

  Coincidence out;
  out.points = static_cast<int>(total);
  out.worst_point = points.front();
  for (std::size_t i = 0; i < deviation.size(); ++i)
    if (deviation[i] > out.max_deviation) {
      out.max_deviation = deviation[i];
      out.worst_point = points[i];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Null sectional curvature

DegeneratePlane make_degenerate_plane(const ChartMetric& g, const Vec& p, const Vec& u, const Vec& v) {
  const int n = g.dim();
  if (p.size() != n || u.size() != n || v.size() != n) throw InputError("plane has the wrong dimension");
  const Mat gp = metric_at(g, p);
  const double uu = inner(gp, u, u), vv = inner(gp, v, v), uv = inner(gp, u, v);
  const double scale = u.squaredNorm() * v.squaredNorm();
  if (!(u.squaredNorm() > 0.0)) throw PreconditionError("u is zero");
  if (std::abs(uu) > kNullTolerance * u.squaredNorm()) throw PreconditionError("u is not null");
  if (!(vv > kDegenerateV * v.squaredNorm()) || !(vv > kDegenerateV))
    throw PreconditionError("v is not spacelike");
  if (std::abs(uu * vv - uv * uv) > kNullTolerance * scale)
    throw PreconditionError("plane is not degenerate");
  return {p, u, v};
}

double null_sectional_curvature(const ChartMetric& g, const DegeneratePlane& plane) {
  const Mat gp = metric_at(g, plane.base);
  const double vv = inner(gp, plane.v, plane.v);
  if (!(vv >= kDegenerateV)) throw PreconditionError("g(v,v) is below the degeneracy threshold");
  const Riemann r = riemann_at(g, plane.base);
  const Vec rv = r.apply(plane.u, plane.v, plane.v);
  return inner(gp, rv, plane.u) / vv;
}

Vec normalize_null(const Mat& gram, const Vec& u, const Vec& U) {
  const double pairing = inner(gram, u, U);
  if (pairing == 0.0) throw PreconditionError("null vector is orthogonal to the observer");
  return u / pairing;
}

DegeneratePlane random_degenerate_plane(const ChartMetric& g, const Vec& p, const Vec& U, Rng& rng) {
  const int n = g.dim();
  if (n < 3) throw InputError("degenerate planes with a spacelike complement need dimension >= 3");
  const Mat gp = metric_at(g, p);
  const double uu = inner(gp, U, U);
  if (!(uu < 0.0)) throw PreconditionError("observer U is not timelike");
  const Vec T = U / std::sqrt(-uu);

  auto random_vec = [&] {
    Vec r(n);
    for (int i = 0; i < n; ++i) r[i] = rng.normal();
    return r;
  };
  // Gram-Schmidt against T (g(T,T) = -1) and previously chosen unit spacelike vectors.
  auto orthogonalize = [&](Vec r, const std::vector<Vec>& spacelike) {
    for (int pass = 0; pass < 2; ++pass) {
      r += inner(gp, r, T) * T;
      for (const Vec& s : spacelike) r -= inner(gp, r, s) * s;
    }
    return Vec(r / std::sqrt(inner(gp, r, r)));
  };
  const Vec e = orthogonalize(random_vec(), {});
  const Vec v = orthogonalize(random_vec(), {e});
  const Vec u = normalize_null(gp, T + e, U);
  return {p, u, v};
}

NullsecCheck pointwise_nullsec_check(const ChartMetric& g, const Vec& p, const TangentVec& U,
                                     int samples, std::uint64_t seed) {
  if (samples < 1) throw InputError("need at least one sample");
  g.require_domain(p);
  Rng rng(seed);
  const Mat gp = metric_at(g, p);
  const Riemann r = riemann_at(g, p);
  NullsecCheck out;
  out.samples = samples;
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    const DegeneratePlane plane = random_degenerate_plane(g, p, U.comp, rng);
    const double k = inner(gp, r.apply(plane.u, plane.v, plane.v), plane.u) / inner(gp, plane.v, plane.v);
    out.min = std::min(out.min, k);
    out.max = std::max(out.max, k);
    sum += k;
  }
  out.value = sum / samples;
  out.spread = out.max - out.min;
  out.is_pointwise = out.spread < kPointwiseTolerance * (1.0 + std::abs(out.value));
  return out;
}

double rescaling_law_residual(const ChartMetric& g, const DegeneratePlane& plane, const Vec& U,
                              const Vec& U2) {
  const Mat gp = metric_at(g, plane.base);
  DegeneratePlane a = plane, b = plane;
  a.u = normalize_null(gp, plane.u, U);
  b.u = normalize_null(gp, plane.u, U2);
  const double ka = null_sectional_curvature(g, a);
  const double kb = null_sectional_curvature(g, b);
  const double factor = inner(gp, a.u, U2);
  const double denom = std::max(std::abs(ka), std::numeric_limits<double>::min());
  return std::abs(ka - factor * factor * kb) / denom;
}

}  // namespace lorhol
