#pragma once

// The family c(r) = -(1-r) dt² + r (dt⊗α + α⊗dt) + ḡ on ℝ_t × S, and a
// compact-support comparison of two metrics on one chart.
//
// The full chart has coordinates (t, s_1, ..., s_m); ḡ and α are written in
// the s coordinates only.

#include <lorhol/geometry.hpp>
#include <lorhol/holonomy.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lorhol {

inline constexpr double kSupportTolerance = 1e-10;

struct DeformationFamily {
  std::string name;
  std::string time_name = "t";
  std::vector<std::string> s_coords;
  std::vector<Expr> s_metric;  // upper triangle, row-major
  std::vector<Expr> alpha;     // one component per s coordinate
  std::vector<Interval> s_domain;
  std::vector<Interval> s_box;
  Interval t_box{-1.0, 1.0};
  double sup_alpha = 0.0;      // sup |α|_ḡ over the validation samples
  double min_s_eigenvalue = 0.0;

  int dim() const { return static_cast<int>(s_coords.size()) + 1; }
  // ḡ at a spatial point.
  Mat s_metric_at(const Vec& x) const;
  Vec alpha_at(const Vec& x) const;
};

// Parses and validates: ḡ positive definite and α finite at seeded samples of
// the spatial box. Throws InputError / PreconditionError.
DeformationFamily make_deformation_family(std::string name, std::vector<std::string> s_coords,
                                          const std::vector<std::string>& s_metric_upper,
                                          const std::vector<std::string>& alpha,
                                          std::vector<Interval> s_domain, std::vector<Interval> s_box,
                                          Interval t_box = {-1.0, 1.0}, int samples = 256,
                                          std::uint64_t seed = 0);

// Flat ℝ² with α = a·dx.
DeformationFamily flat_deformation_family(double a = 0.3);

// Throws InputError unless 0 <= r <= 1.
ChartMetric build_deformation(const DeformationFamily& fam, double r);

// c(r)^{-1} dt.
Vec gradient_of_t(const Mat& c);

struct GradientCheck {
  double residual = 0.0;            // max |∇ grad t|
  double max_grad_norm = 0.0;       // max c(grad t, grad t)
  double min_grad_norm = 0.0;       // min c(grad t, grad t)
  double killing_residual = 0.0;    // max |∇ ∂_t|
  double killing_norm = 0.0;        // c(∂_t, ∂_t) = -(1-r)
  int nodes = 0;
};

GradientCheck gradient_parallel_check(const DeformationFamily& fam, double r, const GridSpec& grid);

struct SpeedBoundCheck {
  double max_violation = 0.0;   // max(|w|_ḡ - bound, 0)
  double max_ratio = 0.0;       // max |w|_ḡ / bound
  double max_causal_defect = 0.0;  // max c(v,v) over samples, should be <= 0
  double min_pairing = 0.0;     // min c(grad t, v) over future samples
  int trials = 0;
  int past_directed = 0;        // samples the time orientation calls past
};

// v = (1, w) sampled on and inside the causal cone; the cone radius in each
// direction comes from solving the quadratic c(v,v) = 0 for |w|.
SpeedBoundCheck causal_speed_bound_check(const DeformationFamily& fam, double r, int trials,
                                         std::uint64_t seed);

// r|α| + sqrt(r²|α|² + (1 - r)).
double causal_speed_bound(double r, double alpha_norm);

struct ConservationCheck {
  double max_drift = 0.0;          // of c(grad t, k')
  double max_killing_drift = 0.0;  // of c(∂_t, k')
  double max_energy_drift = 0.0;
  int trials = 0;
  int completed = 0;
  std::vector<std::string> failures;
};

ConservationCheck geodesic_conservation_check(const DeformationFamily& fam, double r, int trials,
                                              std::uint64_t seed, double span = 10.0);

struct SupportDiff {
  bool compact_support = false;
  double sup_outside = 0.0;
  double sup_inside = 0.0;
  Vec worst_point;
  int nodes_outside = 0;
};

// Sup of |g1 - g2| over grid nodes outside core_box. The grid spans grid.box,
// or g1's working box when that is empty.
SupportDiff compact_support_diff(const ChartMetric& g1, const ChartMetric& g2,
                                 const std::vector<Interval>& core_box, const GridSpec& grid);

}  // namespace lorhol
