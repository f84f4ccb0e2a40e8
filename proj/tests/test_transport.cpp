#include <lorhol/errors.hpp>
#include <lorhol/transport.hpp>
#include <lorhol/zoo.hpp>

#include "support.hpp"
#include "transport_checks.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace lorhol;
using namespace lorhol::testing;

namespace {

// Rotation angle of P on the sphere factor of r_x_s2 at p, in the orthonormal
// frame (∂θ, ∂φ / sin θ).
double sphere_angle(const Mat& P, const Vec& p) {
  const double s = std::sin(p[1]);
  const double c11 = P(1, 1), c21 = P(2, 1) * s;
  return std::atan2(c21, c11);
}

}  // namespace

TEST_CASE("rectangle loop in minkowski is the identity") {
  const ChartMetric g = builtin("minkowski2");
  const CurveSpec loop = coordinate_rectangle_loop(g, 0, 1, Vec::Zero(2), 1.0, 1.0);
  REQUIRE(loop.pieces().size() == 4);
  CHECK(loop.pieces()[1].to == vec({1.0, 1.0}));
  CHECK(loop.end() == loop.start());
  const TransportResult r = parallel_transport(g, loop);
  CHECK(r.converged);
  CHECK(matrix_max_abs(r.matrix - Mat::Identity(2, 2)) < 1e-12);
}

TEST_CASE("latitude-meridian loop on the sphere rotates by the enclosed area") {
  const ChartMetric g = builtin("r_x_s2");
  for (auto [th0, th1, dphi] : {std::tuple{0.6, 1.2, 0.9}, std::tuple{1.0, 2.0, 0.5}, std::tuple{0.4, 2.6, 1.7}}) {
    const Vec p = vec({0.0, th0, 0.0});
    const CurveSpec loop = coordinate_rectangle_loop(g, 1, 2, p, th1 - th0, dphi);
    const TransportResult r = parallel_transport(g, loop);
    REQUIRE(r.converged);
    const double area = dphi * (std::cos(th0) - std::cos(th1));
    CHECK(std::abs(std::abs(sphere_angle(r.matrix, p)) - area) < 1e-7);
    CHECK(matrix_max_abs(r.matrix.col(0) - unit(3, 0)) < 1e-12);
    CHECK(matrix_max_abs(r.matrix.row(0) - unit(3, 0).transpose()) < 1e-12);
    const TransportResult back = parallel_transport(g, loop.reversed());
    CHECK(sphere_angle(back.matrix, p) == doctest::Approx(-sphere_angle(r.matrix, p)).epsilon(1e-7));
  }
}

TEST_CASE("clifton-pohl deck-closed radial paths") {
  const ChartMetric g = builtin("clifton_pohl");
  const Identification& id = g.identifications()[0];

  // Along the diagonal the transport is trivial.
  const CurveSpec diag = CurveSpec::deck_closed(CurveSpec::polyline({vec({1, 1}), vec({2, 2})}), 0, id);
  const TransportResult d = parallel_transport(g, diag);
  REQUIRE(d.converged);
  CHECK(matrix_max_abs(d.matrix - Mat::Identity(2, 2)) < 1e-8);

  // Off the diagonal it is a boost with eigenvalues 2^{±0.6}.
  const CurveSpec off = CurveSpec::deck_closed(CurveSpec::polyline({vec({1, 0.5}), vec({2, 1})}), 0, id);
  const TransportResult b = parallel_transport(g, off);
  REQUIRE(b.converged);
  TransportOptions fine;
  fine.tolerance = 1e-11;
  const TransportResult bf = parallel_transport(g, off, fine);
  CHECK(matrix_max_abs(b.matrix - bf.matrix) < 1e-7);

  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(bf.matrix));
  std::vector<double> lam{es.eigenvalues()[0].real(), es.eigenvalues()[1].real()};
  std::sort(lam.begin(), lam.end());
  CHECK(std::abs(es.eigenvalues()[0].imag()) < 1e-12);
  CHECK(lam[0] == doctest::Approx(std::pow(2.0, -0.6)).epsilon(1e-8));
  CHECK(lam[1] == doctest::Approx(std::pow(2.0, 0.6)).epsilon(1e-8));
  CHECK(lam[0] * lam[1] == doctest::Approx(1.0).epsilon(1e-9));
  const Mat G = metric_at(g, vec({1, 0.5}));
  CHECK(matrix_max_abs(bf.matrix.transpose() * G * bf.matrix - G) < 1e-9);
}

TEST_CASE("geodesic examples") {
  const ChartMetric mink = builtin("minkowski4");
  const Vec p = vec({0.1, 0.2, -0.3, 0.4});
  const Vec v = vec({1.0, 0.3, -0.2, 0.1});
  const GeodesicResult line = integrate_geodesic(mink, p, {p, v}, 100.0);
  CHECK(line.outcome == GeodesicOutcome::Completed);
  CHECK(line.s_end == doctest::Approx(100.0));
  REQUIRE_FALSE(line.samples.empty());
  CHECK(matrix_max_abs(line.samples.back().x - (p + line.samples.back().s * v)) < 1e-9);

  const ChartMetric s2 = builtin("r_x_s2");
  const Vec q = s2.default_point();
  const GeodesicResult tline = integrate_geodesic(s2, q, {q, unit(3, 0)}, 1000.0);
  CHECK(tline.outcome == GeodesicOutcome::Completed);
  CHECK(tline.energy_drift < 1e-12);
  CHECK(tline.samples.back().x[0] == doctest::Approx(1000.0));
}

TEST_CASE("clifton-pohl null geodesic along x blows up at s = pi/2") {
  // y stays 1 and x' = (x^2 + 1)/2, so x = tan(s/2 + pi/4).
  const ChartMetric g = builtin("clifton_pohl");
  const Vec p = vec({1.0, 1.0});
  const GeodesicResult a = integrate_geodesic(g, p, {p, vec({1.0, 0.0})}, 10.0);
  CHECK(a.outcome == GeodesicOutcome::Blowup);
  CHECK(a.s_end == doctest::Approx(kPi / 2).epsilon(1e-3));
  GeodesicOptions fine;
  fine.tolerance /= 16.0;
  const GeodesicResult b = integrate_geodesic(g, p, {p, vec({1.0, 0.0})}, 10.0, 1e9, fine);
  CHECK(b.outcome == GeodesicOutcome::Blowup);
  CHECK(std::abs(a.s_end - b.s_end) / b.s_end < 5e-4);
  for (const auto& smp : a.samples) CHECK(smp.x[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a curve leaving the domain is reported") {
  const ChartMetric g = builtin("clifton_pohl");
  CHECK_THROWS_AS(parallel_transport(g, CurveSpec::polyline({vec({1, 1}), vec({-1, 1})})), OutsideDomain);
  const GeodesicResult r = integrate_geodesic(g, vec({1, 1}), {vec({1, 1}), vec({-1.0, 0.0})}, 100.0);
  CHECK(r.outcome != GeodesicOutcome::Completed);
}

TEST_CASE("parametric and polyline descriptions agree") {
  const ChartMetric g = builtin("r_x_s2");
  const std::vector<std::string> s{"s"};
  const CurveSpec arc = CurveSpec::parametric({parse_expr("0.1*s", s), parse_expr("1 + 0.5*s", s), parse_expr("0.3*s", s)},
                                              {0.0, 0.5, 1.0});
  const CurveSpec line = CurveSpec::polyline({vec({0, 1, 0}), vec({0.1, 1.5, 0.3})});
  CHECK(matrix_max_abs(parallel_transport(g, arc).matrix - parallel_transport(g, line).matrix) < 1e-8);
}

TEST_CASE("property: transport algebra on the zoo") {
  for (const auto& name : builtin_names()) {
    const ChartMetric g = builtin(name);
    const TransportAlgebra t = transport_algebra(g, 21, 4);
    INFO(name);
    CHECK(t.metricity < 1e-7);
    CHECK(t.composition < 1e-7);
    CHECK(t.inversion < 1e-7);
    CHECK(t.zero_area < kTransportTolerance);
    CHECK(t.max_flat_deviation < 1e-10);
    if (t.curved_planes > 0) {
      CHECK(t.min_order >= 1.9);
      CHECK(t.max_limit_error < 0.1);
    }
  }
}

TEST_CASE("property: geodesic energy is conserved") {
  Rng rng(4);
  for (const char* name : {"r_x_s2", "r_x_s3", "rt_rx_s2", "minkowski4"}) {
    const ChartMetric g = builtin(name);
    for (int k = 0; k < 3; ++k) {
      const Vec p = random_box_point(g, rng, 0.3);
      Vec v = random_vec(g.dim(), rng) * 0.05;
      v[0] = 1.0;
      const GeodesicResult r = integrate_geodesic(g, p, {p, v}, 3.0);
      if (r.outcome != GeodesicOutcome::Completed) continue;
      CHECK_MESSAGE(r.energy_drift < 1e-6, name);
    }
  }
}
