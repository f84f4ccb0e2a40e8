#include <lorhol/report.hpp>

#include <lorhol/errors.hpp>
#include <lorhol/flip.hpp>
#include <lorhol/holonomy.hpp>
#include <lorhol/transport.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>

namespace lorhol {

namespace {

using json = nlohmann::ordered_json;

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json bound_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json to_json(const std::vector<Interval>& box) {
  json out = json::array();
  for (const auto& iv : box) out.push_back(json::array({bound_json(iv.lo), bound_json(iv.hi)}));
  return out;
}

json eigenvalues_json(const Mat& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), false);
  std::vector<std::complex<double>> values(es.eigenvalues().data(),
                                           es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(values.begin(), values.end(), [](auto a, auto b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) > std::abs(b) : a.imag() > b.imag();
  });
  json out = json::array();
  for (const auto& v : values) out.push_back(json::array({v.real(), v.imag()}));
  return out;
}

json tolerances() {
  return json{{"transport_convergence", kTransportTolerance},
              {"transport_step_floor", kStepFloor},
              {"fixed_subspace", kFixedTolerance},
              {"gram_sign", kGramTolerance},
              {"causal", kCausalTolerance},
              {"condition_limit", kConditionLimit},
              {"path_independence", kParallelResidual},
              {"unit_timelike", kUnitTolerance},
              {"flip_fd_step", kFlipFdStep},
              {"nullsec_pointwise", kPointwiseTolerance},
              {"null_vector", kNullTolerance},
              {"log_radius", kLogRadius},
              {"algebra_rank_relative", kAlgebraRankCut},
              {"algebra_rank_absolute", kAlgebraRankFloor},
              {"support", kSupportTolerance},
              {"geodesic_local", GeodesicOptions{}.tolerance},
              {"geodesic_blowup_speed", 1e9},
              {"geodesic_blowup_step", GeodesicOptions{}.blowup_step}};
}

json header(const ChartMetric& g, const ReportOptions& o) {
  json metric{{"name", g.name()}, {"dim", g.dim()}, {"coords", g.coords()}};
  json comps = json::array();
  for (int i = 0; i < g.dim(); ++i)
    for (int j = i; j < g.dim(); ++j) comps.push_back(g.component(i, j).to_string());
  metric["components_upper"] = comps;
  metric["domain"] = to_json(g.domain());
  metric["box"] = to_json(g.box());
  metric["identifications"] = g.identifications().size();
  return json{{"schema", kReportSchema},
              {"tool", {{"name", "lorhol"}, {"version", kToolVersion}}},
              {"command", o.command},
              {"metric", metric},
              {"seed", o.seed},
              {"budget", o.budget},
              {"conventions",
               {{"signature", "(-,+,...,+)"},
                {"curvature", "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z; "
                              "R(d_i,d_j)d_k = R^l_kij d_l; round unit sphere has K = +1"},
                {"future", "g(v, T) < 0 for the declared time orientation T"},
                {"deformation_dt2_coefficient", "-(1-r)"}}},
              {"tolerances", tolerances()},
              {"qualifier", "on the sampled region"}};
}

Vec base_point(const ChartMetric& g, const ReportOptions& o) {
  const Vec p = o.point ? *o.point : g.default_point();
  if (p.size() != g.dim()) throw InputError("--point needs " + std::to_string(g.dim()) + " values");
  g.require_domain(p);
  return p;
}

bool has_unconverged(const HolonomySample& s) {
  return std::any_of(s.dropped.begin(), s.dropped.end(),
                     [](const std::string& d) { return d.find("unconverged") != std::string::npos; });
}

json verdict_json(const HolonomyVerdict& v) {
  json out{{"kind", to_string(v.kind)}};
  if (v.witness) out["witness"] = to_json(v.witness->comp);
  else out["witness"] = nullptr;
  out["fixed_dim"] = v.fixed_dim;
  out["restricted_gram_eigenvalues"] = v.restricted_eigenvalues;
  out["residuals"] = {{"invariance", v.invariance_residual},
                      {"max_metricity_defect", v.max_metricity_defect},
                      {"max_transport_error", v.max_transport_error},
                      {"max_generator_eigenvalue_modulus", v.max_eigenvalue_modulus}};
  out["generators"] = v.generators;
  out["dropped"] = v.dropped;
  out["budget"] = v.budget;
  return out;
}

json sample_json(const HolonomySample& s) {
  json gens = json::array();
  const int n = static_cast<int>(s.gram.rows());
  for (const auto& gen : s.generators)
    gens.push_back({{"loop", gen.descriptor},
                    {"deck", gen.deck},
                    {"err_est", gen.transport.err_est},
                    {"halvings", gen.transport.halvings},
                    {"deviation_from_identity",
                     (gen.matrix() - Mat::Identity(n, n)).cwiseAbs().maxCoeff()},
                    {"max_eigenvalue_modulus", max_eigenvalue_modulus(gen.matrix())}});
  return json{{"base", to_json(s.base)},
              {"gram", to_json(s.gram)},
              {"seed", s.seed},
              {"budget", s.budget},
              {"generators", gens},
              {"dropped", s.dropped}};
}

struct Context {
  const ChartMetric& g;
  const std::optional<DeformationFamily>& deformation;
  const ReportOptions& o;
  bool unconverged = false;
};

json holonomy_section(Context& ctx) {
  const Vec base = base_point(ctx.g, ctx.o);
  const HolonomySample s = sample_holonomy(ctx.g, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(s);
  const HolonomyVerdict v = precompactness_verdict(ctx.g, s);
  const FixedSubspace f = fixed_subspace(s);
  const AlgebraDimension alg = holonomy_algebra_dim(s);

  json out{{"verdict", verdict_json(v)}};
  out["fixed_subspace"] = {{"dim", f.dim()},
                           {"basis", to_json(Mat(f.basis.transpose()))},
                           {"gram_restricted", to_json(f.gram_restricted)},
                           {"singular_values", to_json(Vec(f.singular_values))},
                           {"invariance_residual", f.invariance_residual}};
  if (v.kind == VerdictKind::PrecompactTimelike) {
    const ParallelSystem ps = orthonormal_parallel_system(ctx.g, s);
    out["k"] = ps.k;
  } else {
    out["k"] = 0;
  }
  if (!s.generators.empty()) {
    const auto widest = std::max_element(s.generators.begin(), s.generators.end(), [](const auto& a, const auto& b) {
      return max_eigenvalue_modulus(a.matrix()) < max_eigenvalue_modulus(b.matrix());
    });
    out["extreme_generator"] = {{"loop", widest->descriptor},
                                {"deck", widest->deck},
                                {"eigenvalues", eigenvalues_json(widest->matrix())}};
  }
  out["algebra_dim"] = {{"dim", alg.dim}, {"skipped", alg.skipped}};
  out["compactness_with_finite_fundamental_group"] = "not decidable numerically";
  out["sample"] = sample_json(s);
  return out;
}

json parallel_vector_section(Context& ctx) {
  const ChartMetric& g = ctx.g;
  const Vec base = base_point(g, ctx.o);
  const HolonomySample s = sample_holonomy(g, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(s);
  const HolonomyVerdict v = precompactness_verdict(g, s);
  Vec v0 = ctx.o.direction ? *ctx.o.direction : time_orientation_at(g, base);
  if (v0.size() != g.dim()) throw InputError("--direction needs " + std::to_string(g.dim()) + " values");

  json out{{"verdict", verdict_json(v)}, {"v0", to_json(v0)}};
  const HaarAverage avg = haar_average_vector(s, TangentVec{base, v0}, ctx.o.word_len, ctx.o.words, ctx.o.seed);
  out["average"] = {{"vector", to_json(avg.vector.comp)},
                    {"converged", avg.converged},
                    {"zero_average", avg.zero_average},
                    {"residual", avg.residual},
                    {"mode", avg.mode},
                    {"word_length", avg.word_length},
                    {"orbit_max_norm", avg.orbit_max_norm}};
  if (!avg.converged) {
    out["field"] = nullptr;
    return out;
  }
  Vec w = avg.vector.comp;
  const double q = inner(s.gram, w, w);
  if (q < 0.0) w /= std::sqrt(-q);
  GridSpec grid;
  grid.per_axis = ctx.o.grid;
  const ParallelField field = parallel_field_extend(g, TangentVec{base, w}, grid);
  ctx.unconverged |= !field.converged;
  out["field"] = {{"w", to_json(w)},
                  {"causal", to_string(causal_classify(g, TangentVec{base, w}).type)},
                  {"grid_per_axis", grid.per_axis},
                  {"nodes", field.nodes.size()},
                  {"path_independence_residual", field.residual},
                  {"certified_parallel", field.residual < kParallelResidual}};
  return out;
}

json parallel_system_section(Context& ctx) {
  const Vec base = base_point(ctx.g, ctx.o);
  const HolonomySample s = sample_holonomy(ctx.g, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(s);
  const HolonomyVerdict v = precompactness_verdict(ctx.g, s);
  json out{{"verdict", verdict_json(v)}};
  if (v.kind != VerdictKind::PrecompactTimelike) {
    out["k"] = 0;
    out["frame"] = json::array();
    out["note"] = "no timelike invariant vector in the sample";
    return out;
  }
  const ParallelSystem ps = orthonormal_parallel_system(ctx.g, s);
  json frame = json::array();
  for (const auto& e : ps.frame.vectors) frame.push_back(to_json(e));
  out["k"] = ps.k;
  out["frame"] = frame;
  out["orthonormality_residual"] = ps.orthonormality_residual;
  out["holonomy_in"] = "SO(" + std::to_string(ctx.g.dim() - ps.k) + ") on the orthogonal complement";
  return out;
}

json relative_section(Context& ctx) {
  const ChartMetric& g = ctx.g;
  if (ctx.o.slice.empty()) throw InputError("relative-holonomy needs --slice with the held coordinates");
  std::vector<int> held;
  for (const auto& name : ctx.o.slice) {
    const auto it = std::find(g.coords().begin(), g.coords().end(), name);
    if (it == g.coords().end()) throw InputError("--slice: unknown coordinate '" + name + "'");
    held.push_back(static_cast<int>(it - g.coords().begin()));
  }
  const Vec base = base_point(g, ctx.o);
  const RelativeHolonomy rel = relative_holonomy(g, held, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(rel.sample);
  json out{{"held", ctx.o.slice},
           {"second_fundamental_form", rel.second_fundamental_form},
           {"verdict", verdict_json(rel.verdict)},
           {"fixed_dim", rel.fixed.dim()}};
  out["normal_section"] = rel.normal_section ? to_json(*rel.normal_section) : json(nullptr);
  out["normal_invariant_basis"] = to_json(Mat(rel.normal_invariant_basis.transpose()));
  out["sample"] = sample_json(rel.sample);
  return out;
}

json covering_section(Context& ctx) {
  const Vec base = base_point(ctx.g, ctx.o);
  const CoveringReport rep = covering_compare(ctx.g, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(rep.cover) || has_unconverged(rep.quotient);
  json deck = json::array();
  for (const auto& d : rep.deck_generators)
    deck.push_back({{"loop", d.descriptor},
                    {"matrix", to_json(d.matrix)},
                    {"deviation_from_identity", d.deviation_from_identity},
                    {"max_eigenvalue_modulus", d.max_eigenvalue_modulus}});
  return json{{"cover_generators", rep.cover.generators.size()},
              {"quotient_generators", rep.quotient.generators.size()},
              {"embedding_error", rep.embedding_error},
              {"embedded", rep.embedded},
              {"deck_generators", deck},
              {"cover_verdict", to_string(precompactness_verdict(ctx.g, rep.cover).kind)},
              {"quotient_verdict", to_string(precompactness_verdict(ctx.g, rep.quotient).kind)}};
}

json flip_section(Context& ctx) {
  const ChartMetric& g = ctx.g;
  const Vec base = base_point(g, ctx.o);
  const HolonomySample s = sample_holonomy(g, base, ctx.o.budget, ctx.o.seed);
  ctx.unconverged |= has_unconverged(s);
  const HolonomyVerdict v = precompactness_verdict(g, s);
  json out{{"verdict", to_string(v.kind)}};
  if (v.kind != VerdictKind::PrecompactTimelike) {
    out["flip_deviation"] = nullptr;
    out["note"] = "no unit timelike parallel field to flip";
    return out;
  }
  GridSpec grid;
  grid.per_axis = ctx.o.grid;
  auto field = std::make_shared<const ParallelField>(parallel_field_extend(g, *v.witness, grid));
  ctx.unconverged |= !field->converged;
  try {
    const FlipMetric flip = flip_metric(g, field);
    const Coincidence c = connection_coincidence(flip, grid);
    out["V"] = to_json(v.witness->comp);
    out["flip_deviation"] = c.max_deviation;
    out["worst_point"] = to_json(c.worst_point);
    out["grid_per_axis"] = grid.per_axis;
    out["diagnostics"] = {{"unit_defect", flip.diagnostics.unit_defect},
                          {"path_independence_residual", flip.diagnostics.parallel_residual},
                          {"min_flip_eigenvalue", flip.diagnostics.min_eigenvalue},
                          {"flip_unit_defect", flip.diagnostics.flip_unit_defect}};
  } catch (const PreconditionError& e) {
    out["flip_deviation"] = nullptr;
    out["note"] = std::string("flip rejected: ") + e.what();
  }
  return out;
}

const char* sign_of(double value, double spread) {
  if (std::abs(value) <= std::max(kNullTolerance, spread)) return "zero";
  return value > 0 ? "positive" : "negative";
}

json nullsec_section(Context& ctx) {
  const ChartMetric& g = ctx.g;
  if (g.dim() < 3) return json{{"skipped", "degenerate planes need dimension >= 3"}};
  const Vec p = base_point(g, ctx.o);
  const Vec U = ctx.o.direction ? *ctx.o.direction : time_orientation_at(g, p);
  if (U.size() != g.dim()) throw InputError("--direction needs " + std::to_string(g.dim()) + " values");
  const NullsecCheck c = pointwise_nullsec_check(g, p, TangentVec{p, U}, ctx.o.samples, ctx.o.seed);
  return json{{"point", to_json(p)},
              {"U", to_json(U)},
              {"nullsec_pointwise", c.is_pointwise},
              {"value", c.value},
              {"spread", c.spread},
              {"min", c.min},
              {"max", c.max},
              {"samples", c.samples},
              {"nullsec_sign", sign_of(c.value, c.spread)}};
}

json geodesic_section(Context& ctx) {
  const ChartMetric& g = ctx.g;
  const Vec p = base_point(g, ctx.o);
  const Vec v = ctx.o.direction ? *ctx.o.direction : time_orientation_at(g, p);
  if (v.size() != g.dim()) throw InputError("--direction needs " + std::to_string(g.dim()) + " values");
  GeodesicOptions fine;
  fine.tolerance /= 16.0;
  const GeodesicResult a = integrate_geodesic(g, p, TangentVec{p, v}, ctx.o.span);
  const GeodesicResult b = integrate_geodesic(g, p, TangentVec{p, v}, ctx.o.span, 1e9, fine);
  ctx.unconverged |= a.outcome == GeodesicOutcome::Stalled;
  const double rel = std::abs(a.s_end - b.s_end) / std::max(std::abs(b.s_end), 1e-300);
  return json{{"point", to_json(p)},
              {"direction", to_json(v)},
              {"span", ctx.o.span},
              {"outcome", to_string(a.outcome)},
              {"s_end", a.s_end},
              {"reason", a.reason},
              {"energy_drift", a.energy_drift},
              {"max_speed", a.max_speed},
              {"steps", a.steps},
              {"refined", {{"outcome", to_string(b.outcome)}, {"s_end", b.s_end}, {"relative_change", rel}}},
              {"reproducible_3_digits", a.outcome == b.outcome && rel < 5e-4},
              {"end_position", a.samples.empty() ? json(nullptr) : to_json(a.samples.back().x)}};
}

json deform_section(Context& ctx) {
  const DeformationFamily fam = ctx.deformation ? *ctx.deformation : flat_deformation_family(0.3);
  std::vector<double> rs{0.0, 0.25, 0.5, 0.75, 1.0};
  if (ctx.o.r) rs = {*ctx.o.r};
  GridSpec grid;
  grid.per_axis = ctx.o.grid;
  json per_r = json::array();
  for (double r : rs) {
    const ChartMetric c = build_deformation(fam, r);
    const GradientCheck gc = gradient_parallel_check(fam, r, grid);
    const SpeedBoundCheck sb = causal_speed_bound_check(fam, r, ctx.o.trials, ctx.o.seed);
    const ConservationCheck cc = geodesic_conservation_check(fam, r, 8, ctx.o.seed, 10.0);
    ctx.unconverged |= cc.completed != cc.trials;
    Vec p = Vec::Zero(c.dim());
    for (int a = 0; a < c.dim(); ++a) p[a] = 0.5 * (c.box()[static_cast<std::size_t>(a)].lo + c.box()[static_cast<std::size_t>(a)].hi);
    const Mat gp = metric_at(c, p);
    const Vec grad = gradient_of_t(gp);
    Vec dt = Vec::Zero(c.dim());
    dt[0] = 1.0;
    per_r.push_back({{"r", r},
                     {"grad_t",
                      {{"at", to_json(p)},
                       {"vector", to_json(grad)},
                       {"norm", inner(gp, grad, grad)},
                       {"causal", to_string(causal_classify(c, TangentVec{p, grad}).type)},
                       {"parallel_residual", gc.residual},
                       {"norm_range", json::array({gc.min_grad_norm, gc.max_grad_norm})}}},
                     {"d_t",
                      {{"norm", gc.killing_norm},
                       {"causal", to_string(causal_classify(c, TangentVec{p, dt}).type)},
                       {"parallel_residual", gc.killing_residual}}},
                     {"speed_bound",
                      {{"trials", sb.trials},
                       {"max_violation", sb.max_violation},
                       {"max_ratio", sb.max_ratio},
                       {"max_causal_defect", sb.max_causal_defect},
                       {"min_pairing_with_grad_t", sb.min_pairing},
                       {"past_directed_samples", sb.past_directed}}},
                     {"conservation",
                      {{"trials", cc.trials},
                       {"completed", cc.completed},
                       {"max_drift_grad_t", cc.max_drift},
                       {"max_drift_d_t", cc.max_killing_drift},
                       {"max_energy_drift", cc.max_energy_drift},
                       {"failures", cc.failures}}}});
  }
  return json{{"family", fam.name},
              {"s_coords", fam.s_coords},
              {"sup_alpha", fam.sup_alpha},
              {"note", "bounds hold over the sampled spatial box only"},
              {"results", per_r}};
}

json diff_support_section(Context& ctx) {
  if (!ctx.o.other) throw InputError("diff-support needs --other-spec or --other-builtin");
  std::vector<Interval> core = ctx.o.core_box;
  if (core.empty())
    for (const auto& iv : ctx.g.box()) {
      const double mid = 0.5 * (iv.lo + iv.hi), half = 0.25 * iv.width();
      core.push_back({mid - half, mid + half});
    }
  GridSpec grid;
  grid.per_axis = ctx.o.grid;
  const SupportDiff d = compact_support_diff(ctx.g, *ctx.o.other, core, grid);
  return json{{"other", ctx.o.other->name()},
              {"core_box", to_json(core)},
              {"grid_per_axis", grid.per_axis},
              {"compact_support", d.compact_support},
              {"sup_outside", d.sup_outside},
              {"sup_inside", d.sup_inside},
              {"worst_point", to_json(d.worst_point)},
              {"nodes_outside", d.nodes_outside}};
}

}  // namespace

const std::vector<std::string>& report_commands() {
  static const std::vector<std::string> commands{
      "holonomy", "parallel-vector", "parallel-system", "relative-holonomy", "covering", "flip",
      "nullsec",  "geodesic",        "deform",          "diff-support",      "report"};
  return commands;
}

Report run_report(const ChartMetric& g, const std::optional<DeformationFamily>& deformation,
                  const ReportOptions& options) {
  if (options.budget < 1) throw InputError("--budget must be at least 1");
  if (options.grid < 1) throw InputError("--grid must be at least 1");
  Context ctx{g, deformation, options};
  json out = header(g, options);
  const std::string& cmd = options.command;
  json results;
  if (cmd == "holonomy") results = holonomy_section(ctx);
  else if (cmd == "parallel-vector") results = parallel_vector_section(ctx);
  else if (cmd == "parallel-system") results = parallel_system_section(ctx);
  else if (cmd == "relative-holonomy") results = relative_section(ctx);
  else if (cmd == "covering") results = covering_section(ctx);
  else if (cmd == "flip") results = flip_section(ctx);
  else if (cmd == "nullsec") results = nullsec_section(ctx);
  else if (cmd == "geodesic") results = geodesic_section(ctx);
  else if (cmd == "deform") results = deform_section(ctx);
  else if (cmd == "diff-support") results = diff_support_section(ctx);
  else if (cmd == "report") {
    results["holonomy"] = holonomy_section(ctx);
    results["parallel_system"] = parallel_system_section(ctx);
    results["flip"] = flip_section(ctx);
    results["nullsec"] = nullsec_section(ctx);
    results["geodesic"] = geodesic_section(ctx);
    if (!g.identifications().empty()) results["covering"] = covering_section(ctx);
    if (deformation) results["deform"] = deform_section(ctx);
  } else {
    throw InputError("unknown command '" + cmd + "'");
  }
  out["results"] = results;
  out["status"] = ctx.unconverged ? "unconverged" : "ok";
  return Report{out, ctx.unconverged ? kExitUnconverged : kExitOk};
}

}  // namespace lorhol
