#pragma once

// Flip Riemannian metric of a unit timelike parallel field, and null
// sectional curvature of degenerate planes.

#include <lorhol/geometry.hpp>
#include <lorhol/holonomy.hpp>
#include <lorhol/random.hpp>

#include <cstdint>
#include <functional>
#include <memory>

namespace lorhol {

inline constexpr double kUnitTolerance = 1e-8;      // |g(V,V) + 1|
inline constexpr double kFlipFdStep = 1e-4;         // finite-difference step for ∂V
inline constexpr double kPointwiseTolerance = 1e-6;
inline constexpr double kNullTolerance = 1e-10;
inline constexpr double kDegenerateV = 1e-12;

// V near `anchor`, evaluated at `at`. Sampled fields pick a grid node from the
// anchor and transport from it, so every stencil point around one anchor sees
// the same smooth function.
using VectorField = std::function<Vec(const Vec& anchor, const Vec& at)>;

VectorField sampled_field(const ChartMetric& g, std::shared_ptr<const ParallelField> field);

struct FlipDiagnostics {
  double unit_defect = 0.0;          // max |g(V,V) + 1| over the field grid
  double parallel_residual = 0.0;
  double min_eigenvalue = 0.0;       // of g_R over the field grid
  double flip_unit_defect = 0.0;     // max |g_R(V,V) - 1|
  int nodes = 0;
};

// g_R = g + 2 (gV) ⊗ (gV), evaluated pointwise.
class FlipMetric {
 public:
  FlipMetric(const ChartMetric& g, VectorField field, double fd_step = kFlipFdStep);

  const ChartMetric& lorentzian() const { return g_; }
  int dim() const { return g_.dim(); }

  Vec field_at(const Vec& p) const { return field_(p, p); }
  Mat metric_at(const Vec& p) const;
  // Γ(g_R) with exact ∂g and Richardson-extrapolated central differences of V.
  Christoffel christoffel_at(const Vec& p) const;

  FlipDiagnostics diagnostics;

 private:
  ChartMetric g_;
  VectorField field_;
  double h_;
};

// Checked construction: V unit timelike and path independent at every node,
// g_R positive definite with g_R(V,V) = 1. Throws PreconditionError.
FlipMetric flip_metric(const ChartMetric& g, std::shared_ptr<const ParallelField> field);

// Unchecked, for fields given in closed form (negative controls).
FlipMetric flip_from_field(const ChartMetric& g, VectorField field);

struct Coincidence {
  double max_deviation = 0.0;
  Vec worst_point;
  int points = 0;
};

// max over grid nodes of |Γ(g) - Γ(g_R)|.
Coincidence connection_coincidence(const FlipMetric& flip, const GridSpec& grid);

struct DegeneratePlane {
  Vec base;
  Vec u;  // null
  Vec v;  // spacelike, g(u, v) = 0
};

// Validates the plane against g: g(u,u) ≈ 0, g(v,v) > 0, Gram determinant ≈ 0.
DegeneratePlane make_degenerate_plane(const ChartMetric& g, const Vec& p, const Vec& u, const Vec& v);

// g(R(u,v)v, u) / g(v,v).
double null_sectional_curvature(const ChartMetric& g, const DegeneratePlane& plane);

// u rescaled so that g(u, U) = 1.
Vec normalize_null(const Mat& gram, const Vec& u, const Vec& U);

struct NullsecCheck {
  bool is_pointwise = false;
  double spread = 0.0;
  double value = 0.0;  // mean
  double min = 0.0;
  double max = 0.0;
  int samples = 0;
};

// Random degenerate planes at p, each with u normalized by g(u, U) = 1.
NullsecCheck pointwise_nullsec_check(const ChartMetric& g, const Vec& p, const TangentVec& U,
                                     int samples, std::uint64_t seed);

// A random degenerate plane at p built around the timelike U.
DegeneratePlane random_degenerate_plane(const ChartMetric& g, const Vec& p, const Vec& U, Rng& rng);

// |K_U - g(u_U, U')^2 K_U'| / |K_U| for one plane.
double rescaling_law_residual(const ChartMetric& g, const DegeneratePlane& plane, const Vec& U,
                              const Vec& U2);

}  // namespace lorhol
