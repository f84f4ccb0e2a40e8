#include <lorhol/deformation.hpp>
#include <lorhol/errors.hpp>
#include <lorhol/zoo.hpp>

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace lorhol;
using namespace lorhol::testing;

namespace {

DeformationFamily product_family() {
  return make_deformation_family("product", {"x", "y"}, {"1", "0", "1"}, {"0", "0"}, {{}, {}},
                                 {{-2, 2}, {-2, 2}});
}

// Curved S with a non-closed α.
DeformationFamily curved_family() {
  return make_deformation_family("curved", {"x", "y"}, {"1", "0", "cosh(x)^2"}, {"0.2*y", "0"}, {{}, {}},
                                 {{-1, 1}, {-1, 1}});
}

ChartMetric minkowski_plus(const std::string& extra_xx) {
  return make_metric("bumped", {"t", "x"}, {"-1", "0", "1 + " + extra_xx}, {{}, {}}, {{-5, 5}, {-5, 5}}, {},
                     {"1", "0"});
}

}  // namespace

TEST_CASE("family endpoints") {
  const DeformationFamily fam = flat_deformation_family(0.3);
  CHECK(fam.sup_alpha == doctest::Approx(0.3));
  const Vec p = vec({0.2, -0.4, 0.7});

  const ChartMetric c0 = build_deformation(fam, 0.0);
  CHECK((metric_at(c0, p) - Mat(Vec(vec({-1, 1, 1})).asDiagonal())).cwiseAbs().maxCoeff() == 0.0);

  const ChartMetric c1 = build_deformation(fam, 1.0);
  CHECK(c1.component(0, 0).is_zero_literal());
  Mat expected(3, 3);
  expected << 0, 0.3, 0, 0.3, 1, 0, 0, 0, 1;
  CHECK((metric_at(c1, p) - expected).cwiseAbs().maxCoeff() < 1e-15);

  // ∂t is null at r = 1, and grad t = c^{-1} dt has c-norm -1/|α|² there.
  CHECK(metric_at(c1, p)(0, 0) == 0.0);
  const Vec grad = gradient_of_t(metric_at(c1, p));
  CHECK(inner(metric_at(c1, p), grad, grad) == doctest::Approx(-1.0 / 0.09).epsilon(1e-12));

  const ChartMetric half = build_deformation(product_family(), 0.5);
  const Mat h = metric_at(half, p);
  CHECK(h(0, 0) == -0.5);
  CHECK(h(0, 1) == 0.0);
  CHECK(causal_classify(half, {p, gradient_of_t(h)}).type == CausalType::Timelike);

  CHECK_THROWS_AS(build_deformation(fam, 1.5), InputError);
  CHECK_THROWS_AS(build_deformation(fam, -0.1), InputError);
}

TEST_CASE("property: components are affine in r") {
  const DeformationFamily fam = curved_family();
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const double r1 = rng.uniform(), r2 = rng.uniform(), lam = rng.uniform();
    const Vec p = vec({rng.uniform(-1, 1), rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)});
    const Mat mix = metric_at(build_deformation(fam, lam * r1 + (1 - lam) * r2), p);
    const Mat lin = lam * metric_at(build_deformation(fam, r1), p) + (1 - lam) * metric_at(build_deformation(fam, r2), p);
    CHECK((mix - lin).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("property: grad t is timelike for r < 1 and pairs positively with future vectors") {
  const DeformationFamily fam = flat_deformation_family(0.3);
  for (double r : {0.0, 0.3, 0.6, 0.9, 0.99}) {
    const ChartMetric c = build_deformation(fam, r);
    const Mat G = metric_at(c, Vec::Zero(3));
    const Vec grad = gradient_of_t(G);
    CHECK(inner(G, grad, grad) < 0.0);
    const SpeedBoundCheck sb = causal_speed_bound_check(fam, r, 2000, 4);
    CHECK(sb.min_pairing >= -1e-12);
    CHECK(sb.past_directed == 0);
  }
}

TEST_CASE("gradient parallel check") {
  for (double r : {0.0, 0.4, 0.9}) CHECK(gradient_parallel_check(product_family(), r, GridSpec{}).residual < 1e-10);
  const GradientCheck flat = gradient_parallel_check(flat_deformation_family(0.3), 0.7, GridSpec{});
  CHECK(flat.residual < 1e-8);
  CHECK(flat.nodes == 125);
  const GradientCheck curved = gradient_parallel_check(curved_family(), 0.5, GridSpec{});
  CHECK(std::isfinite(curved.residual));
  CHECK(curved.killing_norm == doctest::Approx(-0.5));
}

TEST_CASE("causal speed bound") {
  CHECK(causal_speed_bound(0.0, 0.7) == 1.0);
  CHECK(causal_speed_bound(1.0, 0.3) == doctest::Approx(0.6));

  const DeformationFamily fam = flat_deformation_family(0.3);
  const SpeedBoundCheck zero = causal_speed_bound_check(fam, 0.0, 20000, 1);
  CHECK(zero.max_violation == 0.0);
  CHECK(zero.max_ratio == doctest::Approx(1.0).epsilon(1e-12));
  for (double r : {0.5, 1.0}) {
    const SpeedBoundCheck sb = causal_speed_bound_check(fam, r, 100000, 2);
    CHECK(sb.trials == 100000);
    CHECK(sb.max_violation == 0.0);
    CHECK(sb.max_causal_defect <= 1e-12);
  }
}

TEST_CASE("geodesic conservation") {
  CHECK(geodesic_conservation_check(product_family(), 0.0, 6, 1).max_drift < 1e-8);
  const ConservationCheck c9 = geodesic_conservation_check(flat_deformation_family(0.3), 0.9, 6, 1);
  CHECK(c9.completed == c9.trials);
  CHECK(c9.max_drift < 1e-6);
  const ConservationCheck c1 = geodesic_conservation_check(flat_deformation_family(0.3), 1.0, 4, 1, 1000.0);
  CHECK(c1.completed == c1.trials);
  CHECK(c1.max_drift < 1e-6);
  CHECK(c1.max_killing_drift < 1e-6);
}

TEST_CASE("family validation") {
  CHECK_THROWS_AS(make_deformation_family("bad", {"x"}, {"-1"}, {"0"}, {{}}, {{-1, 1}}), PreconditionError);
  CHECK_THROWS_AS(make_deformation_family("bad", {"x"}, {"1"}, {"log(x)"}, {{}}, {{-1, 1}}), Error);
}

TEST_CASE("compact support diff") {
  const ChartMetric m = builtin("minkowski2");
  const std::vector<Interval> core{{-1, 1}, {-1, 1}};
  GridSpec grid;
  grid.per_axis = 11;

  const SupportDiff same = compact_support_diff(m, m, core, grid);
  CHECK(same.compact_support);
  CHECK(same.sup_outside == 0.0);

  const SupportDiff gauss = compact_support_diff(m, minkowski_plus("exp(-x^2-t^2)"), core, grid);
  CHECK_FALSE(gauss.compact_support);
  CHECK(gauss.sup_outside == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(gauss.sup_inside == doctest::Approx(1.0));

  // max(0, 1 - s^2) written with abs
  const std::string bump = "0.5*((1 - t^2) + abs(1 - t^2))*0.5*((1 - x^2) + abs(1 - x^2))";
  const SupportDiff bumped = compact_support_diff(m, minkowski_plus(bump), core, grid);
  CHECK(bumped.compact_support);
  CHECK(bumped.sup_outside == 0.0);
  CHECK(bumped.sup_inside == doctest::Approx(1.0));

  CHECK_THROWS_AS(compact_support_diff(m, builtin("minkowski4"), core, grid), InputError);
}
