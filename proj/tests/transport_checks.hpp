#pragma once

// Transport algebra on one metric: metricity, composition, inversion, the
// zero-area loop, and the h² law for small rectangles.

#include <lorhol/geometry.hpp>
#include <lorhol/transport.hpp>

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lorhol::testing {

struct TransportAlgebra {
  double metricity = 0.0;
  double composition = 0.0;
  double inversion = 0.0;
  double zero_area = 0.0;
  double min_order = 1e300;         // observed order of |P - I| in h
  double max_limit_error = 0.0;     // |(P - I)/h² + R(e_i,e_j)| / |R| at the smallest h
  double max_flat_deviation = 0.0;  // |P - I| where R vanishes
  int trials = 0;
  int curved_planes = 0;
};

inline CurveSpec random_polyline(const ChartMetric& g, const Vec& start, Rng& rng, int legs, double scale) {
  std::vector<Vec> pts{start};
  for (int k = 0; k < legs; ++k) {
    Vec q = pts.back();
    for (;;) {
      Vec cand = q;
      for (int a = 0; a < g.dim(); ++a)
        cand[a] += scale * g.box()[static_cast<std::size_t>(a)].width() * rng.uniform(-1.0, 1.0);
      if (g.in_box(cand)) {
        q = cand;
        break;
      }
    }
    pts.push_back(q);
  }
  return CurveSpec::polyline(pts);
}

inline double matrix_max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline TransportAlgebra transport_algebra(const ChartMetric& g, std::uint64_t seed, int trials) {
  TransportAlgebra out;
  Rng rng(seed);
  const int n = g.dim();
  const Mat I = Mat::Identity(n, n);
  for (int t = 0; t < trials; ++t) {
    const Vec p = random_box_point(g, rng, 0.25);
    const CurveSpec a = random_polyline(g, p, rng, 2, 0.1);
    const CurveSpec b = random_polyline(g, a.end(), rng, 2, 0.1);
    const Mat Pa = parallel_transport(g, a).matrix;
    const Mat Pb = parallel_transport(g, b).matrix;
    const Mat Pab = parallel_transport(g, a.then(b)).matrix;
    const Mat Pinv = parallel_transport(g, a.reversed()).matrix;
    const Mat G0 = metric_at(g, a.start());
    const Mat G1 = metric_at(g, a.end());
    out.metricity = std::max(out.metricity, matrix_max_abs(Pa.transpose() * G1 * Pa - G0));
    out.composition = std::max(out.composition, matrix_max_abs(Pab - Pb * Pa));
    out.inversion = std::max(out.inversion, matrix_max_abs(Pinv * Pa - I));

    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    const double w = std::min(g.box()[static_cast<std::size_t>(i)].width(), g.box()[static_cast<std::size_t>(j)].width());
    out.zero_area = std::max(
        out.zero_area, matrix_max_abs(parallel_transport(g, coordinate_rectangle_loop(g, i, j, p, 0.0, 0.1 * w)).matrix - I));

    const Mat R = riemann_at(g, p).endomorphism(i, j);
    const double rn = matrix_max_abs(R);
    TransportOptions fine;
    fine.tolerance = 1e-12;
    fine.step_floor = 1e-7;
    std::vector<double> dev;
    double limit = 0.0;
    for (double h : {0.04, 0.02, 0.01}) {
      const double s = h * w;
      const Mat P = parallel_transport(g, coordinate_rectangle_loop(g, i, j, p, s, s), fine).matrix;
      dev.push_back(matrix_max_abs(P - I));
      limit = matrix_max_abs((P - I) / (s * s) + R) / std::max(rn, 1e-300);
    }
    if (rn < 1e-12) {
      out.max_flat_deviation = std::max(out.max_flat_deviation, *std::max_element(dev.begin(), dev.end()));
    } else {
      ++out.curved_planes;
      for (std::size_t k = 0; k + 1 < dev.size(); ++k)
        out.min_order = std::min(out.min_order, std::log2(dev[k] / dev[k + 1]));
      out.max_limit_error = std::max(out.max_limit_error, limit);
    }
    ++out.trials;
  }
  return out;
}

}  // namespace lorhol::testing
