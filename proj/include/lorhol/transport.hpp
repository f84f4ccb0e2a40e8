#pragma once

// Parallel transport and geodesics along curves in a chart.

#include <lorhol/geometry.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lorhol {

inline constexpr double kTransportTolerance = 1e-8;
inline constexpr double kStepFloor = 1e-6;

// A curve made of pieces joined end to end. A piece is a straight segment in
// coordinates or a parametric arc given by n expressions in the parameter `s`.
class CurveSpec {
 public:
  enum class Kind { Polyline, Parametric, DeckClosed };

  struct Piece {
    bool parametric = false;
    Vec from;
    Vec to;
    std::vector<Expr> components;  // in the single variable s
    double s0 = 0.0;
    double s1 = 1.0;
  };

  static CurveSpec polyline(std::vector<Vec> points);
  // breakpoints split [s0, s1] into pieces; at least two values, increasing.
  static CurveSpec parametric(std::vector<Expr> components, std::vector<double> breakpoints);
  // A path from p to φ(p) for the identification φ; transport is composed with
  // the inverse differential of φ so the result acts on T_p.
  static CurveSpec deck_closed(const CurveSpec& path, int identification_index,
                               const Identification& identification);

  Kind kind() const { return kind_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  int identification_index() const { return identification_index_; }
  const std::optional<Identification>& identification() const { return identification_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  Vec start() const;
  Vec end() const;

  CurveSpec reversed() const;
  // Concatenation; `next` must start where this curve ends. Not for deck loops.
  CurveSpec then(const CurveSpec& next) const;

  // Position and coordinate velocity (d/du, u in [0,1]) on a piece.
  static void evaluate(const Piece& piece, double u, Vec& position, Vec& velocity);
  static double coordinate_length(const Piece& piece);

 private:
  Kind kind_ = Kind::Polyline;
  std::vector<Piece> pieces_;
  int identification_index_ = -1;
  std::optional<Identification> identification_;
  std::string label_;
};

struct TransportResult {
  Mat matrix;           // columns: transported coordinate basis vectors
  double err_est = 0.0; // max-norm change under the last step halving
  bool converged = false;
  int halvings = 0;
  CurveSpec loop;
};

struct TransportOptions {
  double tolerance = kTransportTolerance;
  double step_floor = kStepFloor;
  int initial_steps_per_unit = 8;  // RK4 steps per unit of coordinate length
};

// Solves v' + Γ(c', v) = 0 with classical RK4, doubling the step count until
// two successive resolutions agree to `tolerance`. Throws OutsideDomain when
// the curve leaves the chart domain.
TransportResult parallel_transport(const ChartMetric& g, const CurveSpec& c,
                                   const TransportOptions& options = {});

// Fixed-resolution variant; used where the result must depend smoothly on the
// endpoints (finite differences of transported fields).
Mat parallel_transport_fixed(const ChartMetric& g, const CurveSpec& c, int steps_per_piece);

// Closed polyline p -> p+a e_i -> p+a e_i+b e_j -> p+b e_j -> p.
CurveSpec coordinate_rectangle_loop(const ChartMetric& g, int i, int j, const Vec& p, double a,
                                    double b);

enum class GeodesicOutcome { Completed, LeftDomain, Blowup, Stalled };

const char* to_string(GeodesicOutcome o);

struct GeodesicSample {
  double s = 0.0;
  Vec x;
  Vec v;
  double energy = 0.0;  // g(v, v)
};

struct GeodesicResult {
  GeodesicOutcome outcome = GeodesicOutcome::Completed;
  double s_end = 0.0;
  double max_speed = 0.0;
  double energy_drift = 0.0;  // max |E(s) - E(0)| / max(|E(0)|, |v0|^2)
  long steps = 0;
  std::string reason;
  std::vector<GeodesicSample> samples;
};

struct GeodesicOptions {
  double tolerance = 1e-11;    // local error per step, relative to state size
  double initial_step = 1e-2;
  double blowup_step = 1e-12;  // step below which a fast geodesic is declared blown up
  long max_steps = 5'000'000;
  int sample_every = 64;
};

GeodesicResult integrate_geodesic(const ChartMetric& g, const Vec& p, const TangentVec& v,
                                  double affine_span, double blowup_threshold = 1e9,
                                  const GeodesicOptions& options = {});

}  // namespace lorhol
