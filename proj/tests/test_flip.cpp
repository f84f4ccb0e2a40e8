#include <lorhol/errors.hpp>
#include <lorhol/flip.hpp>
#include <lorhol/zoo.hpp>

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace lorhol;
using namespace lorhol::testing;

namespace {

std::shared_ptr<const ParallelField> field_of(const ChartMetric& g, const Vec& w, int per_axis = 5) {
  GridSpec grid;
  grid.per_axis = per_axis;
  return std::make_shared<const ParallelField>(parallel_field_extend(g, {g.default_point(), w}, grid));
}

// g_tt perturbed by 0.1 sin θ on the ℝ×S³ chart.
ChartMetric perturbed_r_x_s3() {
  const ChartMetric base = builtin("r_x_s3");
  return make_metric("perturbed", base.coords(),
                     {"-1 + 0.1*sin(theta)", "0", "0", "0", "1", "0", "0", "sin(chi)^2", "0", "sin(chi)^2*sin(theta)^2"},
                     base.domain(), base.box(), {}, {"1", "0", "0", "0"});
}

}  // namespace

TEST_CASE("flip of minkowski by dt is euclidean") {
  const ChartMetric g = builtin("minkowski2");
  const FlipMetric f = flip_metric(g, field_of(g, unit(2, 0)));
  CHECK((f.metric_at(vec({0.3, -1.2})) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(f.diagnostics.min_eigenvalue == doctest::Approx(1.0));
  const Coincidence c = connection_coincidence(f, GridSpec{});
  CHECK(c.max_deviation == 0.0);
  CHECK(c.points == 25);
}

TEST_CASE("flip of r_x_s2 by dt is dt^2 plus the sphere") {
  const ChartMetric g = builtin("r_x_s2");
  const FlipMetric f = flip_metric(g, field_of(g, unit(3, 0)));
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const Vec p = random_box_point(g, rng);
    Mat expected = metric_at(g, p);
    expected(0, 0) = 1.0;
    CHECK((f.metric_at(p) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  GridSpec grid;
  grid.per_axis = 6;
  CHECK(connection_coincidence(f, grid).max_deviation < 1e-8);
}

TEST_CASE("non-unit fields are rejected") {
  const ChartMetric g = builtin("r_x_s2");
  CHECK_THROWS_AS(flip_metric(g, field_of(g, 2.0 * unit(3, 0))), PreconditionError);
  CHECK_THROWS_AS(flip_metric(g, field_of(g, unit(3, 1))), PreconditionError);
}

TEST_CASE("non-parallel field gives a different connection") {
  // unit timelike but not parallel: V = cosh(x/2) dt + sinh(x/2) dx
  const ChartMetric g = builtin("minkowski2");
  const FlipMetric f = flip_from_field(g, [](const Vec&, const Vec& at) {
    return vec({std::cosh(at[1] / 2), std::sinh(at[1] / 2)});
  });
  CHECK(connection_coincidence(f, GridSpec{}).max_deviation > 1e-3);
}

TEST_CASE("property: flip values on and off V") {
  const ChartMetric g = builtin("r_x_s3");
  const FlipMetric f = flip_metric(g, field_of(g, unit(4, 0), 3));
  Rng rng(31);
  for (int k = 0; k < 50; ++k) {
    const Vec p = random_box_point(g, rng);
    const Mat G = metric_at(g, p);
    const Mat GR = f.metric_at(p);
    const Vec V = f.field_at(p);
    CHECK(inner(GR, V, V) == doctest::Approx(-inner(G, V, V)).epsilon(1e-10));
    Vec a = random_vec(4, rng), b = random_vec(4, rng);
    a -= inner(G, a, V) / inner(G, V, V) * V;
    b -= inner(G, b, V) / inner(G, V, V) * V;
    CHECK(std::abs(inner(GR, a, b) - inner(G, a, b)) < 1e-10 * (1 + a.norm() * b.norm()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(GR), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] > 0.0);
  }
}

TEST_CASE("null sectional curvature examples") {
  const ChartMetric mink = builtin("minkowski4");
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const Vec p = random_box_point(mink, rng);
    const DegeneratePlane plane = random_degenerate_plane(mink, p, unit(4, 0), rng);
    CHECK(null_sectional_curvature(mink, plane) == 0.0);
  }

  const ChartMetric s2 = builtin("r_x_s2");
  const Vec p = vec({0.0, kPi / 2, 0.0});
  const DegeneratePlane plane = make_degenerate_plane(s2, p, vec({1, 1, 0}), vec({0, 0, 1}));
  CHECK(null_sectional_curvature(s2, plane) == doctest::Approx(1.0).epsilon(1e-12));
  const DegeneratePlane doubled = make_degenerate_plane(s2, p, vec({1, 1, 0}), vec({0, 0, 2}));
  CHECK(null_sectional_curvature(s2, doubled) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(make_degenerate_plane(s2, p, vec({1, 0.5, 0}), vec({0, 0, 1})), PreconditionError);
  CHECK_THROWS_AS(make_degenerate_plane(s2, p, vec({1, 1, 0}), vec({0, 1, 0})), PreconditionError);
}

TEST_CASE("pointwise checks") {
  const ChartMetric s3 = builtin("r_x_s3");
  const Vec p = vec({0.0, 1.0, 1.0, 1.0});
  const NullsecCheck pos = pointwise_nullsec_check(s3, p, {p, unit(4, 0)}, 200, 0);
  CHECK(pos.is_pointwise);
  CHECK(pos.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pos.spread < 1e-10);

  const ChartMetric mink = builtin("minkowski4");
  const NullsecCheck zero = pointwise_nullsec_check(mink, Vec::Zero(4), {Vec::Zero(4), unit(4, 0)}, 200, 0);
  CHECK(zero.is_pointwise);
  CHECK(zero.value == 0.0);

  const ChartMetric bent = perturbed_r_x_s3();
  const NullsecCheck gen = pointwise_nullsec_check(bent, p, {p, unit(4, 0)}, 200, 0);
  CHECK_FALSE(gen.is_pointwise);
  CHECK(gen.spread > 1e-3);
}

TEST_CASE("property: rescaling law and choice of v") {
  Rng rng(41);
  for (const ChartMetric& g : {builtin("r_x_s3"), perturbed_r_x_s3(), builtin("rt_rx_s2")}) {
    for (int k = 0; k < 100; ++k) {
      const Vec p = random_box_point(g, rng);
      const Vec U = random_future_timelike(g, p, rng, 0.5);
      const Vec U2 = random_future_timelike(g, p, rng, 0.5);
      const DegeneratePlane plane = random_degenerate_plane(g, p, U, rng);
      const double K = null_sectional_curvature(g, plane);
      if (std::abs(K) < 1e-6) continue;
      CHECK_MESSAGE(rescaling_law_residual(g, plane, U, U2) < 1e-8, g.name());

      const double a = rng.uniform(0.5, 2.0) * (rng.below(2) ? 1 : -1);
      const double b = rng.uniform(-2.0, 2.0);
      const DegeneratePlane same = make_degenerate_plane(g, p, plane.u, a * plane.v + b * plane.u);
      CHECK(null_sectional_curvature(g, same) == doctest::Approx(K).epsilon(1e-8));
    }
  }
}
