#include <lorhol/holonomy.hpp>

#include <lorhol/errors.hpp>
#include <lorhol/parallel.hpp>
#include <lorhol/random.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace lorhol {

namespace {

std::string format_vec(const Vec& v) {
  std::string out = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", v[i]);
    out += buf;
  }
  return out + ")";
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Mat identity(int n) { return Mat::Identity(n, n); }

Identification inverse_of(const Identification& id) {
  if (id.kind == Identification::Kind::Translation) return Identification::translation(-id.offset);
  const Mat inv = id.matrix.inverse();
  return Identification::linear(inv, -(inv * id.offset));
}

struct LoopPlan {
  CurveSpec curve;
  std::string descriptor;
  bool deck = false;
  int identification = -1;
};

std::vector<int> resolve_free_axes(const ChartMetric& g, const std::vector<int>& requested) {
  std::vector<int> axes = requested;
  if (axes.empty()) {
    axes.resize(static_cast<std::size_t>(g.dim()));
    std::iota(axes.begin(), axes.end(), 0);
  }
  return axes;
}

}  // namespace

double max_eigenvalue_modulus(const Mat& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Sampling

HolonomySample HolonomySample::synthetic(const Vec& base, const Mat& gram,
                                         const Vec& time_orientation,
                                         const std::vector<Mat>& matrices) {
  HolonomySample s;
  s.base = base;
  s.gram = gram;
  s.time_orientation = time_orientation;
  s.budget = static_cast<int>(matrices.size());
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    Generator gen;
    gen.transport.matrix = matrices[i];
    gen.transport.converged = true;
    gen.descriptor = "synthetic[" + std::to_string(i) + "]";
    s.generators.push_back(std::move(gen));
  }
  return s;
}

HolonomySample sample_holonomy(const ChartMetric& g, const Vec& base, int budget,
                               std::uint64_t seed, const SampleOptions& options) {
  if (budget < 1) throw InputError("loop budget must be at least 1");
  if (base.size() != g.dim()) throw InputError("base point has the wrong dimension");
  g.require_domain(base);
  if (options.scales.empty()) throw InputError("no loop scales given");

  const std::vector<int> free = resolve_free_axes(g, options.free_axes);
  for (int a : free) {
    if (a < 0 || a >= g.dim()) throw InputError("free axis out of range");
    if (!(g.box()[static_cast<std::size_t>(a)].width() > 0.0))
      throw PreconditionError("working box too small for any loop along axis " +
                              g.coords()[static_cast<std::size_t>(a)]);
  }

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < free.size(); ++i)
    for (std::size_t j = i + 1; j < free.size(); ++j) pairs.emplace_back(free[i], free[j]);

  // Every loop draws from the stream in the same order, so the first m loops
  // do not depend on the budget.
  Rng rng(seed);
  std::vector<LoopPlan> plans;
  plans.reserve(static_cast<std::size_t>(budget) + g.identifications().size());
  for (int m = 0; m < budget; ++m) {
    const double scale = options.scales[static_cast<std::size_t>(m) % options.scales.size()];
    Vec q = base;
    LoopPlan plan;
    char buf[160];
    if (pairs.empty()) {
      // A single free axis encloses no area: out and back along it.
      const int a = free.front();
      const Interval& iv = g.box()[static_cast<std::size_t>(a)];
      q[a] = rng.uniform(iv.lo, iv.hi);
      plan.curve = CurveSpec::polyline({base, q, base});
      std::snprintf(buf, sizeof buf, "segment axis=%d", a);
    } else {
      const auto [i, j] = pairs[rng.below(pairs.size())];
      const Interval& bi = g.box()[static_cast<std::size_t>(i)];
      const Interval& bj = g.box()[static_cast<std::size_t>(j)];
      const double a = (rng.below(2) ? -1.0 : 1.0) * scale * bi.width();
      const double b = (rng.below(2) ? -1.0 : 1.0) * scale * bj.width();
      for (int axis : free) {
        const Interval& iv = g.box()[static_cast<std::size_t>(axis)];
        double lo = iv.lo, hi = iv.hi;
        if (axis == i) lo += std::max(0.0, -a), hi -= std::max(0.0, a);
        if (axis == j) lo += std::max(0.0, -b), hi -= std::max(0.0, b);
        q[axis] = rng.uniform(lo, hi);
      }
      Vec q1 = q, q2 = q, q3 = q;
      q1[i] += a;
      q2[i] += a;
      q2[j] += b;
      q3[j] += b;
      plan.curve = CurveSpec::polyline({base, q, q1, q2, q3, q, base});
      std::snprintf(buf, sizeof buf, "rect axes=(%d,%d) sides=(%.6g,%.6g) scale=%g corner=", i, j,
                    a, b, scale);
    }
    plan.descriptor = std::string(buf) + format_vec(q);
    plan.curve.set_label(plan.descriptor);
    plans.push_back(std::move(plan));
  }

  HolonomySample s;
  s.base = base;
  s.gram = metric_at(g, base);
  s.time_orientation = time_orientation_at(g, base);
  s.seed = seed;
  s.budget = budget;

  if (options.include_deck) {
    const auto& ids = g.identifications();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      LoopPlan plan;
      plan.deck = true;
      plan.identification = static_cast<int>(k);
      Identification id = ids[k];
      Vec target = id.apply(base);
      plan.descriptor = "deck[" + std::to_string(k) + "]";
      if (!g.in_domain(target)) {
        id = inverse_of(id);
        target = id.apply(base);
        plan.descriptor += "^-1";
      }
      if (!g.in_domain(target)) {
        s.dropped.push_back(plan.descriptor + ": image of the base point leaves the domain");
        continue;
      }
      plan.curve = CurveSpec::deck_closed(CurveSpec::polyline({base, target}), plan.identification, id);
      plan.curve.set_label(plan.descriptor);
      plans.push_back(std::move(plan));
    }
  }

  std::vector<std::optional<TransportResult>> results(plans.size());
  std::vector<std::string> failures(plans.size());
  parallel_for(plans.size(), [&](std::size_t i) {
    try {
      results[i] = parallel_transport(g, plans[i].curve, options.transport);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!results[i]) {
      s.dropped.push_back(plans[i].descriptor + ": " + failures[i]);
      continue;
    }
    if (!results[i]->converged) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ": unconverged, err_est=%.3g", results[i]->err_est);
      s.dropped.push_back(plans[i].descriptor + buf);
      continue;
    }
    Generator gen;
    gen.transport = std::move(*results[i]);
    gen.descriptor = plans[i].descriptor;
    gen.deck = plans[i].deck;
    gen.identification = plans[i].identification;
    s.generators.push_back(std::move(gen));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Fixed subspace and verdict

FixedSubspace fixed_subspace(const HolonomySample& s) {
  const int n = static_cast<int>(s.gram.rows());
  FixedSubspace f;
  if (s.generators.empty()) {
    f.basis = identity(n);
    f.gram_restricted = s.gram;
    f.singular_values = Eigen::VectorXd::Zero(n);
    return f;
  }
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(s.generators.size()) * n, n);
  for (std::size_t i = 0; i < s.generators.size(); ++i)
    stacked.block(static_cast<Eigen::Index>(i) * n, 0, n, n) = s.generators[i].matrix() - identity(n);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
  f.singular_values = svd.singularValues();
  const double sigma_max = f.singular_values.size() ? f.singular_values[0] : 0.0;
  const double cut = kFixedTolerance * std::max(1.0, sigma_max);
  std::vector<int> kept;
  for (int c = 0; c < n; ++c) {
    const double sigma = c < f.singular_values.size() ? f.singular_values[c] : 0.0;
    if (sigma <= cut) kept.push_back(c);
  }
  f.basis.resize(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c)
    f.basis.col(static_cast<Eigen::Index>(c)) = svd.matrixV().col(kept[c]);
  f.gram_restricted = f.basis.transpose() * s.gram * f.basis;
  for (const auto& gen : s.generators)
    for (Eigen::Index c = 0; c < f.basis.cols(); ++c)
      f.invariance_residual = std::max(
          f.invariance_residual, ((gen.matrix() - identity(n)) * f.basis.col(c)).norm());
  return f;
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::PrecompactTimelike: return "precompact_timelike";
    case VerdictKind::CausalOnly: return "causal_only";
    case VerdictKind::NotPrecompact: return "not_precompact";
  }
  return "?";
}

HolonomyVerdict precompactness_verdict(const ChartMetric&, const HolonomySample& s) {
  HolonomyVerdict v;
  v.generators = static_cast<int>(s.generators.size());
  v.dropped = static_cast<int>(s.dropped.size());
  v.budget = s.budget;
  for (const auto& gen : s.generators) {
    v.max_eigenvalue_modulus = std::max(v.max_eigenvalue_modulus, max_eigenvalue_modulus(gen.matrix()));
    v.max_metricity_defect = std::max(
        v.max_metricity_defect, max_abs(gen.matrix().transpose() * s.gram * gen.matrix() - s.gram));
    v.max_transport_error = std::max(v.max_transport_error, gen.transport.err_est);
  }

  const FixedSubspace f = fixed_subspace(s);
  v.fixed_dim = f.dim();
  v.invariance_residual = f.invariance_residual;
  if (f.dim() == 0) return v;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(f.gram_restricted));
  const Eigen::VectorXd lambda = es.eigenvalues();
  v.restricted_eigenvalues.assign(lambda.data(), lambda.data() + lambda.size());

  auto make_future = [&](Vec w) {
    if (inner(s.gram, w, s.time_orientation) > 0.0) w = -w;
    return w;
  };

  if (lambda[0] < -kGramTolerance) {
    Vec w = f.basis * es.eigenvectors().col(0);
    w /= std::sqrt(-inner(s.gram, w, w));
    v.kind = VerdictKind::PrecompactTimelike;
    v.witness = TangentVec{s.base, make_future(w)};
    return v;
  }
  Eigen::Index null_index = -1;
  for (Eigen::Index c = 0; c < lambda.size(); ++c)
    if (std::abs(lambda[c]) <= kGramTolerance) {
      null_index = c;
      break;
    }
  if (null_index >= 0) {
    Vec w = f.basis * es.eigenvectors().col(null_index);
    v.kind = VerdictKind::CausalOnly;
    v.witness = TangentVec{s.base, make_future(w)};
  }
  return v;
}

// ---------------------------------------------------------------------------
// Averaging

namespace {

double invariance_of(const HolonomySample& s, const Vec& v) {
  const double norm = v.norm();
  if (norm == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& gen : s.generators)
    worst = std::max(worst, (gen.matrix() * v - v).norm() / norm);
  return worst;
}

}  // namespace

HaarAverage haar_average_vector(const HolonomySample& s, const TangentVec& v0, int word_len,
                                long samples, std::uint64_t seed) {
  const int n = static_cast<int>(s.gram.rows());
  if (v0.comp.size() != n) throw InputError("start vector has the wrong dimension");
  if (word_len < 1 || samples < 1) throw InputError("word length and sample count must be positive");
  const double norm0 = v0.comp.norm();
  const double q = inner(s.gram, v0.comp, v0.comp);
  if (!(q < -kCausalTolerance * norm0 * norm0) || inner(s.gram, v0.comp, s.time_orientation) >= 0.0)
    throw PreconditionError("start vector is not future timelike at the base point");

  std::vector<Mat> symbols;
  for (const auto& gen : s.generators) {
    symbols.push_back(gen.matrix());
    symbols.push_back(gen.matrix().inverse());
  }

  HaarAverage out;
  out.vector.base = s.base;
  if (symbols.empty()) {
    out.vector.comp = v0.comp;
    out.mode = "exhaustive";
    out.converged = true;
    out.orbit_max_norm = 1.0;
    return out;
  }

  Mat step = Mat::Zero(n, n);
  for (const auto& m : symbols) step += m;
  step /= static_cast<double>(symbols.size());

  // Does (2K)^word_len fit into the sample budget?
  long words = 1;
  bool exhaustive = true;
  for (int l = 0; l < word_len; ++l) {
    if (words > samples / static_cast<long>(symbols.size())) {
      exhaustive = false;
      break;
    }
    words *= static_cast<long>(symbols.size());
  }

  Vec v = v0.comp;
  if (exhaustive) {
    // Mean over all words of length L equals step^L applied to v0.
    out.mode = "exhaustive";
    for (int l = 0; l < word_len; ++l) v = step * v;
    out.word_length = word_len;
    out.residual = invariance_of(s, v);
  } else {
    // Lazy walk: A = (I + step)/2 removes periodicity. A^L is kept normalized
    // with its log-scale tracked separately so diverging orbits do not overflow.
    out.mode = "markov";
    Mat power = (identity(n) + step) / 2.0;
    double log_scale = 0.0;
    long length = 1;
    for (;;) {
      const Vec raw = power * v0.comp;
      out.residual = invariance_of(s, raw);
      v = log_scale < 700.0 ? Vec(raw * std::exp(log_scale)) : Vec(raw / raw.norm() * norm0);
      out.word_length = length;
      if (out.residual < kFixedTolerance || length > samples / 2) break;
      power = power * power;
      const double scale = max_abs(power);
      if (scale == 0.0) break;
      power /= scale;
      log_scale = 2.0 * log_scale + std::log(scale);
      length *= 2;
    }
  }
  out.vector.comp = v;
  out.zero_average = !(v.norm() > 1e-12 * norm0);
  out.converged = !out.zero_average && out.residual < kFixedTolerance;

  Rng rng(seed);
  const long trials = std::min<long>(samples, 256);
  for (long t = 0; t < trials; ++t) {
    Vec w = v0.comp;
    for (int l = 0; l < word_len; ++l) w = symbols[rng.below(symbols.size())] * w;
    out.orbit_max_norm = std::max(out.orbit_max_norm, w.norm() / norm0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parallel fields

std::vector<double> GridSpec::axis_values(const ChartMetric& g, int axis) const {
  const Interval& iv = (box.empty() ? g.box() : box)[static_cast<std::size_t>(axis)];
  std::vector<double> out;
  if (per_axis <= 1) {
    out.push_back(0.5 * (iv.lo + iv.hi));
    return out;
  }
  for (int k = 0; k < per_axis; ++k)
    out.push_back(iv.lo + (iv.hi - iv.lo) * k / (per_axis - 1));
  return out;
}

long ParallelField::node_index(const std::vector<int>& multi) const {
  const int m = std::max(1, grid.per_axis);
  long idx = 0;
  for (int k : multi) idx = idx * m + k;
  return idx;
}

namespace {

struct FieldNode {
  Vec point;
  Vec vec;
  long index = 0;
};

// Transports w from its base along the axes in `order`, one axis at a time,
// sweeping outwards from the current coordinate along each axis.
std::vector<Vec> extend_along(const ChartMetric& g, const TangentVec& w,
                              const std::vector<std::vector<double>>& values,
                              const std::vector<int>& order, bool& converged) {
  const int n = g.dim();
  const long m = static_cast<long>(values.front().size());
  std::vector<long> stride(static_cast<std::size_t>(n), 1);
  for (int a = n - 2; a >= 0; --a) stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a) + 1] * m;

  std::vector<FieldNode> frontier{{w.base, w.comp, 0}};
  for (int axis : order) {
    const auto& vals = values[static_cast<std::size_t>(axis)];
    std::vector<std::vector<FieldNode>> produced(frontier.size());
    std::vector<char> ok(frontier.size(), 1);
    parallel_for(frontier.size(), [&](std::size_t f) {
      const FieldNode& start = frontier[f];
      auto sweep = [&](long from, long to, long dir) {
        Vec point = start.point;
        Vec vec = start.vec;
        for (long k = from; k != to; k += dir) {
          Vec next = point;
          next[axis] = vals[static_cast<std::size_t>(k)];
          if (next[axis] != point[axis]) {
            const TransportResult r = parallel_transport(g, CurveSpec::polyline({point, next}));
            if (!r.converged) ok[f] = 0;
            vec = r.matrix * vec;
          }
          point = next;
          produced[f].push_back({point, vec, start.index + k * stride[static_cast<std::size_t>(axis)]});
        }
      };
      const double x0 = start.point[axis];
      const long split = static_cast<long>(
          std::lower_bound(vals.begin(), vals.end(), x0) - vals.begin());
      sweep(split, m, 1);
      sweep(split - 1, -1, -1);
    });
    std::vector<FieldNode> next;
    for (std::size_t f = 0; f < produced.size(); ++f) {
      if (!ok[f]) converged = false;
      for (auto& node : produced[f]) next.push_back(std::move(node));
    }
    frontier = std::move(next);
  }
  std::vector<Vec> out(frontier.size());
  for (auto& node : frontier) out[static_cast<std::size_t>(node.index)] = std::move(node.vec);
  return out;
}

}  // namespace

ParallelField parallel_field_extend(const ChartMetric& g, const TangentVec& w, const GridSpec& grid) {
  const int n = g.dim();
  if (w.base.size() != n || w.comp.size() != n) throw InputError("vector has the wrong dimension");
  if (!grid.box.empty() && static_cast<int>(grid.box.size()) != n)
    throw InputError("grid box has the wrong dimension");
  g.require_domain(w.base);

  ParallelField field;
  field.base = w.base;
  field.w = w.comp;
  field.grid = grid;
  field.grid.per_axis = std::max(1, grid.per_axis);

  std::vector<std::vector<double>> values;
  for (int a = 0; a < n; ++a) values.push_back(field.grid.axis_values(g, a));
  const long m = static_cast<long>(values.front().size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= m;
  field.nodes.resize(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Vec p(n);
    long r = idx;
    for (int a = n - 1; a >= 0; --a) {
      p[a] = values[static_cast<std::size_t>(a)][static_cast<std::size_t>(r % m)];
      r /= m;
    }
    if (!g.in_domain(p)) throw OutsideDomain("grid node " + format_vec(p) + " is outside the domain");
    field.nodes[static_cast<std::size_t>(idx)] = p;
  }

  std::vector<int> forward(static_cast<std::size_t>(n));
  std::iota(forward.begin(), forward.end(), 0);
  std::vector<int> backward(forward.rbegin(), forward.rend());
  bool converged = true;
  field.vectors = extend_along(g, w, values, forward, converged);
  const std::vector<Vec> other = extend_along(g, w, values, backward, converged);
  field.converged = converged;

  double scale = 0.0, deviation = 0.0;
  for (std::size_t i = 0; i < field.vectors.size(); ++i) {
    scale = std::max(scale, field.vectors[i].cwiseAbs().maxCoeff());
    deviation = std::max(deviation, (field.vectors[i] - other[i]).cwiseAbs().maxCoeff());
  }
  field.residual = scale > 0.0 ? deviation / scale : 0.0;
  return field;
}

// ---------------------------------------------------------------------------
// Orthonormal parallel systems

ParallelSystem orthonormal_parallel_system(const ChartMetric& g, const HolonomySample& s) {
  ParallelSystem out;
  out.verdict = precompactness_verdict(g, s);
  if (out.verdict.kind != VerdictKind::PrecompactTimelike)
    throw PreconditionError(std::string("holonomy verdict is ") + to_string(out.verdict.kind) +
                            ", not precompact_timelike");
  const FixedSubspace f = fixed_subspace(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(f.gram_restricted));

  // Timelike direction first (most negative eigenvalue), then spacelike ones.
  std::vector<Eigen::Index> order;
  for (Eigen::Index c = 0; c < es.eigenvalues().size(); ++c)
    if (std::abs(es.eigenvalues()[c]) > kGramTolerance) order.push_back(c);

  out.frame.base = s.base;
  std::vector<double> eta;
  for (Eigen::Index c : order) {
    Vec u = f.basis * es.eigenvectors().col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < out.frame.vectors.size(); ++j)
        u -= eta[j] * inner(s.gram, u, out.frame.vectors[j]) * out.frame.vectors[j];
    const double q = inner(s.gram, u, u);
    if (std::abs(q) <= kGramTolerance * u.squaredNorm()) continue;
    u /= std::sqrt(std::abs(q));
    if (q < 0.0 && inner(s.gram, u, s.time_orientation) > 0.0) u = -u;
    out.frame.vectors.push_back(u);
    eta.push_back(q < 0.0 ? -1.0 : 1.0);
  }
  out.k = static_cast<int>(out.frame.vectors.size());
  for (int i = 0; i < out.k; ++i)
    for (int j = 0; j < out.k; ++j) {
      const double target = i == j ? eta[static_cast<std::size_t>(i)] : 0.0;
      out.orthonormality_residual = std::max(
          out.orthonormality_residual,
          std::abs(inner(s.gram, out.frame.vectors[static_cast<std::size_t>(i)],
                         out.frame.vectors[static_cast<std::size_t>(j)]) - target));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Relative holonomy

RelativeHolonomy relative_holonomy(const ChartMetric& g, const std::vector<int>& held_axes,
                                   const Vec& base, int budget, std::uint64_t seed) {
  const int n = g.dim();
  std::set<int> held(held_axes.begin(), held_axes.end());
  if (held.size() != held_axes.size()) throw InputError("slice axes repeat");
  for (int a : held)
    if (a < 0 || a >= n) throw InputError("slice axis out of range");
  if (held.empty() || static_cast<int>(held.size()) >= n)
    throw InputError("a slice holds between 1 and n-1 coordinates");
  std::vector<int> free;
  for (int a = 0; a < n; ++a)
    if (!held.count(a)) free.push_back(a);
  g.require_domain(base);

  RelativeHolonomy out;
  out.held_axes.assign(held.begin(), held.end());

  constexpr int kSliceSamples = 64;
  Rng rng(seed ^ 0x51ce5a3b1e0f7d29ULL);
  for (int t = 0; t <= kSliceSamples; ++t) {
    Vec p = base;
    if (t > 0)
      for (int a : free) p[a] = rng.uniform(g.box()[static_cast<std::size_t>(a)].lo,
                                            g.box()[static_cast<std::size_t>(a)].hi);
    const Mat gp = metric_at(g, p);
    Eigen::MatrixXd induced(free.size(), free.size());
    for (std::size_t i = 0; i < free.size(); ++i)
      for (std::size_t j = 0; j < free.size(); ++j) induced(i, j) = gp(free[i], free[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(induced, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()[0] > 0.0))
      throw PreconditionError("slice is not spacelike at " + format_vec(p));
    const Christoffel gamma = christoffel_at(g, p);
    std::string violations;
    for (int k : held)
      for (int a : free)
        for (int b : free) {
          if (b < a) continue;
          const double v = std::abs(gamma(k, a, b));
          out.second_fundamental_form = std::max(out.second_fundamental_form, v);
          if (v >= 1e-8) {
            char buf[160];
            std::snprintf(buf, sizeof buf, " Gamma^%s_{%s%s}=%.3g",
                          g.coords()[static_cast<std::size_t>(k)].c_str(),
                          g.coords()[static_cast<std::size_t>(a)].c_str(),
                          g.coords()[static_cast<std::size_t>(b)].c_str(), gamma(k, a, b));
            violations += buf;
          }
        }
    if (!violations.empty())
      throw PreconditionError("slice is not totally geodesic at " + format_vec(p) + ":" + violations);
  }

  SampleOptions options;
  options.include_deck = false;
  options.free_axes = free;
  out.sample = sample_holonomy(g, base, budget, seed, options);
  out.fixed = fixed_subspace(out.sample);
  out.verdict = precompactness_verdict(g, out.sample);

  // Normal part of a vector: subtract its g-orthogonal projection onto the
  // slice tangent space span{e_a : a free}.
  const Mat& G = out.sample.gram;
  Eigen::MatrixXd gff(free.size(), free.size());
  for (std::size_t i = 0; i < free.size(); ++i)
    for (std::size_t j = 0; j < free.size(); ++j) gff(i, j) = G(free[i], free[j]);
  const Eigen::LDLT<Eigen::MatrixXd> solver(gff);
  auto normal_part = [&](const Vec& v) {
    const Vec gv = G * v;
    Eigen::VectorXd rhs(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = gv[free[i]];
    const Eigen::VectorXd c = solver.solve(rhs);
    Vec out_v = v;
    for (std::size_t i = 0; i < free.size(); ++i) out_v[free[i]] -= c[static_cast<Eigen::Index>(i)];
    return out_v;
  };

  if (out.verdict.kind == VerdictKind::PrecompactTimelike)
    out.normal_section = normal_part(out.verdict.witness->comp);

  const int k = out.fixed.dim();
  out.normal_invariant_basis.resize(n, 0);
  if (k > 0) {
    Eigen::MatrixXd normals(n, k);
    for (int c = 0; c < k; ++c) normals.col(c) = normal_part(out.fixed.basis.col(c));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(normals, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > kFixedTolerance) ++rank;
    out.normal_invariant_basis = svd.matrixU().leftCols(rank);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverings

CoveringReport covering_compare(const ChartMetric& g, const Vec& base, int budget,
                                std::uint64_t seed) {
  if (g.identifications().empty())
    throw PreconditionError("metric " + g.name() + " has no identifications to compare against");
  CoveringReport out;
  const ChartMetric cover = g.without_identifications(g.name() + "_cover");
  out.cover = sample_holonomy(cover, base, budget, seed);
  out.quotient = sample_holonomy(g, base, budget, seed);

  const auto& q = out.quotient.generators;
  for (const auto& c : out.cover.generators) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : q) best = std::min(best, max_abs(c.matrix() - h.matrix()));
    if (best > kFixedTolerance)
      for (const auto& h1 : q)
        for (const auto& h2 : q) best = std::min(best, max_abs(c.matrix() - h1.matrix() * h2.matrix()));
    out.embedding_error = std::max(out.embedding_error, best);
  }
  out.embedded = out.embedding_error <= kFixedTolerance;

  const int n = g.dim();
  for (const auto& h : q) {
    if (!h.deck) continue;
    out.deck_generators.push_back({h.descriptor, h.matrix(), max_abs(h.matrix() - identity(n)),
                                   max_eigenvalue_modulus(h.matrix())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lie algebra dimension

AlgebraDimension holonomy_algebra_dim(const HolonomySample& s) {
  AlgebraDimension out;
  const int n = static_cast<int>(s.gram.rows());
  std::vector<Eigen::MatrixXd> logs;
  for (const auto& gen : s.generators) {
    const Eigen::MatrixXd p = gen.matrix();
    if (max_abs(gen.matrix() - identity(n)) > kLogRadius) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(p, false);
      bool principal = true;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto lambda = es.eigenvalues()[i];
        if (std::abs(lambda) < 1e-12 || std::abs(std::arg(lambda)) > M_PI - 1e-6) principal = false;
      }
      if (!principal) {
        out.skipped.push_back(gen.descriptor + ": no principal logarithm");
        continue;
      }
      const Eigen::MatrixXd l = p.log();
      if ((l.exp() - p).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
        out.skipped.push_back(gen.descriptor + ": logarithm failed to reproduce the generator");
        continue;
      }
      logs.push_back(l);
    } else {
      logs.push_back(p.log());
    }
  }
  if (logs.empty()) return out;
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(logs.size()), n * n);
  for (std::size_t i = 0; i < logs.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(logs[i].data(), n * n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  const auto& sv = svd.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double cut = std::max(kAlgebraRankCut * (sv.size() ? sv[0] : 0.0), kAlgebraRankFloor);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++out.dim;
  return out;
}

}  // namespace lorhol
