#pragma once

// Small helpers shared by the test binaries: vector literals and seeded
// generators for property tests.

#include <lorhol/geometry.hpp>
#include <lorhol/random.hpp>

#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

namespace lorhol::testing {

inline constexpr double kPi = std::numbers::pi;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec unit(int n, int i) {
  Vec v = Vec::Zero(n);
  v[i] = 1.0;
  return v;
}

// Uniform point in the metric's working box, kept `margin` (fraction of the
// width) away from the faces.
inline Vec random_box_point(const ChartMetric& g, Rng& rng, double margin = 0.1) {
  Vec p(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const Interval& b = g.box()[static_cast<std::size_t>(a)];
    const double w = b.width();
    p[a] = rng.uniform(b.lo + margin * w, b.hi - margin * w);
  }
  return p;
}

inline Vec random_vec(int n, Rng& rng) {
  Vec v(n);
  for (int a = 0; a < n; ++a) v[a] = rng.normal();
  return v;
}

// Future timelike vector at p: time orientation plus a small random part.
inline Vec random_future_timelike(const ChartMetric& g, const Vec& p, Rng& rng, double spread = 0.3) {
  const Mat G = metric_at(g, p);
  Vec T = time_orientation_at(g, p);
  T /= std::sqrt(-inner(G, T, T));
  for (;;) {
    Vec v = T + spread * random_vec(g.dim(), rng);
    if (inner(G, v, v) < -1e-3 && inner(G, v, T) < 0.0) return v;
  }
}

// Random polynomial in `vars` variables of total degree <= 4, as text.
inline std::string random_polynomial(const std::vector<std::string>& vars, Rng& rng) {
  std::string out;
  const int terms = 1 + static_cast<int>(rng.below(5));
  for (int t = 0; t < terms; ++t) {
    const double c = std::round(rng.uniform(-3.0, 3.0) * 100.0) / 100.0;
    std::string term = std::to_string(c);
    int degree = static_cast<int>(rng.below(5));
    while (degree > 0) {
      const int power = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(degree)));
      term += "*" + vars[rng.below(vars.size())] + (power > 1 ? "^" + std::to_string(power) : "");
      degree -= power;
    }
    out += (t ? " + " : "") + term;
  }
  return out;
}

}  // namespace lorhol::testing
