#pragma once

// Lorentzian metrics on a coordinate box and their pointwise tensors.
//
// Conventions: signature (-,+,...,+); R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z
// with components R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l, so the round unit sphere has
// sectional curvature +1.

#include <lorhol/expr.hpp>
#include <lorhol/jet.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lorhol {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kConditionLimit = 1e12;
inline constexpr double kCausalTolerance = 1e-10;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool bounded() const { return lo > -std::numeric_limits<double>::infinity() &&
                                hi < std::numeric_limits<double>::infinity(); }
  double width() const { return hi - lo; }
};

// Affine deck map x -> matrix * x + offset.
struct Identification {
  enum class Kind { Translation, Linear };

  Kind kind = Kind::Translation;
  Mat matrix;
  Vec offset;

  static Identification translation(const Vec& offset);
  static Identification linear(const Mat& matrix, const Vec& offset);

  Vec apply(const Vec& x) const { return matrix * x + offset; }
  Vec apply_inverse(const Vec& x) const;
};

struct TangentVec {
  Vec base;
  Vec comp;
};

struct LorFrame {
  Vec base;
  std::vector<Vec> vectors;
};

class ChartMetric {
 public:
  ChartMetric() = default;

  // `upper` lists g_ij for i <= j in row-major order; the lower triangle
  // shares the same trees. `domain` may be unbounded; `box` must be bounded
  // and is where sampling happens.
  ChartMetric(std::string name, std::vector<std::string> coords, std::vector<Expr> upper,
              std::vector<Interval> domain, std::vector<Interval> box,
              std::vector<Identification> identifications, std::vector<Expr> time_orientation);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const std::vector<std::string>& coords() const { return coords_; }
  const Expr& component(int i, int j) const {
    return components_[static_cast<std::size_t>(i * dim_ + j)];
  }
  const std::vector<Interval>& domain() const { return domain_; }
  const std::vector<Interval>& box() const { return box_; }
  const std::vector<Identification>& identifications() const { return identifications_; }
  const std::vector<Expr>& time_orientation() const { return time_orientation_; }

  // Documented evaluation point (box center unless set).
  const Vec& default_point() const { return default_point_; }
  void set_default_point(const Vec& p);

  ChartMetric without_identifications(std::string new_name) const;

  bool in_domain(const Vec& p) const;
  bool in_box(const Vec& p) const;
  void require_domain(const Vec& p) const;  // throws OutsideDomain

 private:
  std::string name_;
  int dim_ = 0;
  std::vector<std::string> coords_;
  std::vector<Expr> components_;  // dim*dim, symmetric sharing
  std::vector<Interval> domain_;
  std::vector<Interval> box_;
  std::vector<Identification> identifications_;
  std::vector<Expr> time_orientation_;
  Vec default_point_;
};

// Christoffel symbols Γ^k_{ij}, symmetric in (i,j).
struct Christoffel {
  int n = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data{};

  double operator()(int k, int i, int j) const { return data[idx(k, i, j)]; }
  double& operator()(int k, int i, int j) { return data[idx(k, i, j)]; }
  double max_abs() const;

 private:
  static std::size_t idx(int k, int i, int j) {
    return static_cast<std::size_t>((k * kMaxDim + i) * kMaxDim + j);
  }
};

// R^l_{kij}.
struct Riemann {
  int n = 0;
  std::vector<double> data;

  explicit Riemann(int dim = 0) : n(dim), data(static_cast<std::size_t>(dim * dim * dim * dim)) {}

  double operator()(int l, int k, int i, int j) const { return data[idx(l, k, i, j)]; }
  double& operator()(int l, int k, int i, int j) { return data[idx(l, k, i, j)]; }

  // Endomorphism Z -> R(∂_i,∂_j)Z as a matrix acting on coordinate components.
  Mat endomorphism(int i, int j) const;
  // R(X,Y)Z.
  Vec apply(const Vec& x, const Vec& y, const Vec& z) const;

 private:
  std::size_t idx(int l, int k, int i, int j) const {
    return static_cast<std::size_t>(((l * n + k) * n + i) * n + j);
  }
};

struct MetricJet1 {
  Mat g;
  std::array<Mat, kMaxDim> dg;  // dg[m] = ∂_m g
};

struct MetricJet2 {
  Mat g;
  std::array<Mat, kMaxDim> dg;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> ddg;  // ddg[m][q] = ∂_m∂_q g
};

Mat metric_at(const ChartMetric& g, const Vec& p);
MetricJet1 metric_jet1(const ChartMetric& g, const Vec& p);
MetricJet2 metric_jet2(const ChartMetric& g, const Vec& p);

// Inverse with the 1-norm condition check; throws SingularMetric.
Mat checked_inverse(const Mat& g);

Christoffel christoffel_at(const ChartMetric& g, const Vec& p);
Christoffel christoffel_from_jet(const MetricJet1& jet);
Riemann riemann_at(const ChartMetric& g, const Vec& p);

// R_{lkij} = g_{la} R^a_{kij}.
Riemann lower_riemann(const Riemann& r, const Mat& g);

double sectional_curvature(const ChartMetric& g, const Vec& p, const Vec& x, const Vec& y);

Vec time_orientation_at(const ChartMetric& g, const Vec& p);

inline double inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

enum class CausalType { Timelike, Null, Spacelike, Zero };
enum class TimeDirection { Future, Past, None };

struct CausalClass {
  CausalType type = CausalType::Zero;
  TimeDirection direction = TimeDirection::None;
};

const char* to_string(CausalType t);
const char* to_string(TimeDirection d);

CausalClass causal_classify(const ChartMetric& g, const TangentVec& v);

struct SignatureReport {
  bool ok = true;
  int samples = 0;
  int failures = 0;
  Vec worst_point;       // first failing point, else the point with the smallest margin
  double worst_margin = 0.0;  // min over samples of (2nd smallest eigenvalue / |smallest|)
  std::string message;
};

// Exactly one negative eigenvalue and a g-timelike time orientation at
// `samples` seeded points of the working box.
SignatureReport signature_check(const ChartMetric& g, int samples, std::uint64_t seed);

// Max over a grid of |A^T g(φ(x)) A - g(x)| for the identification φ = (A, b),
// on grid points x with φ(x) in the domain.
double identification_deviation(const ChartMetric& g, const Identification& id, int per_axis);

// ∇g assembled from christoffel_at; zero for the Levi-Civita connection.
double metricity_residual(const ChartMetric& g, const Vec& p);

}  // namespace lorhol
