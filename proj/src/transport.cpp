#include <lorhol/transport.hpp>

#include <lorhol/errors.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace lorhol {

namespace {

// A(k, j) = Γ^k_{ij} c'^i, so that v' = -A v.
Mat connection_matrix(const ChartMetric& g, const Vec& x, const Vec& velocity) {
  g.require_domain(x);
  const Christoffel c = christoffel_at(g, x);
  const int n = g.dim();
  Mat a = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c(k, i, j) * velocity[i];
      a(k, j) = s;
    }
  return a;
}

Mat transport_piece(const ChartMetric& g, const CurveSpec::Piece& piece, int steps, Mat m) {
  const double h = 1.0 / steps;
  Vec x, v;
  auto rhs = [&](double u, const Mat& state) -> Mat {
    CurveSpec::evaluate(piece, u, x, v);
    return -(connection_matrix(g, x, v) * state);
  };
  for (int s = 0; s < steps; ++s) {
    const double u = s * h;
    const Mat k1 = rhs(u, m);
    const Mat k2 = rhs(u + 0.5 * h, m + 0.5 * h * k1);
    const Mat k3 = rhs(u + 0.5 * h, m + 0.5 * h * k2);
    const Mat k4 = rhs(u + h, m + h * k3);
    m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return m;
}

Mat transport_all(const ChartMetric& g, const CurveSpec& c, const std::vector<int>& steps) {
  const int n = g.dim();
  Mat m = Mat::Identity(n, n);
  for (std::size_t k = 0; k < c.pieces().size(); ++k) {
    if (CurveSpec::coordinate_length(c.pieces()[k]) == 0.0) continue;
    m = transport_piece(g, c.pieces()[k], steps[k], m);
  }
  return m;
}

Mat close_deck(const CurveSpec& c, const Mat& m) {
  if (c.kind() != CurveSpec::Kind::DeckClosed) return m;
  return c.identification()->matrix.partialPivLu().solve(m);
}

}  // namespace

// ---------------------------------------------------------------------------
// CurveSpec

CurveSpec CurveSpec::polyline(std::vector<Vec> points) {
  if (points.size() < 2) throw InputError("polyline needs at least two points");
  CurveSpec c;
  c.kind_ = Kind::Polyline;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    Piece p;
    p.from = points[i];
    p.to = points[i + 1];
    c.pieces_.push_back(std::move(p));
  }
  return c;
}

CurveSpec CurveSpec::parametric(std::vector<Expr> components, std::vector<double> breakpoints) {
  if (breakpoints.size() < 2) throw InputError("parametric curve needs at least two breakpoints");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw InputError("parametric curve breakpoints must increase");
  CurveSpec c;
  c.kind_ = Kind::Parametric;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    Piece p;
    p.parametric = true;
    p.components = components;
    p.s0 = breakpoints[i];
    p.s1 = breakpoints[i + 1];
    Vec vel;
    evaluate(p, 0.0, p.from, vel);
    evaluate(p, 1.0, p.to, vel);
    c.pieces_.push_back(std::move(p));
  }
  return c;
}

CurveSpec CurveSpec::deck_closed(const CurveSpec& path, int identification_index,
                                 const Identification& identification) {
  if (path.kind_ == Kind::DeckClosed) throw InputError("deck-closed loops cannot be nested");
  const Vec expected = identification.apply(path.start());
  const Vec actual = path.end();
  if ((expected - actual).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + expected.cwiseAbs().maxCoeff()))
    throw InputError("deck-closed path does not end at the image of its start");
  CurveSpec c = path;
  c.kind_ = Kind::DeckClosed;
  c.identification_index_ = identification_index;
  c.identification_ = identification;
  return c;
}

Vec CurveSpec::start() const { return pieces_.front().from; }
Vec CurveSpec::end() const { return pieces_.back().to; }

CurveSpec CurveSpec::reversed() const {
  if (kind_ == Kind::DeckClosed) throw InputError("reverse a deck-closed loop by inverting its transport");
  CurveSpec c = *this;
  std::reverse(c.pieces_.begin(), c.pieces_.end());
  for (auto& p : c.pieces_) {
    std::swap(p.from, p.to);
    std::swap(p.s0, p.s1);
  }
  return c;
}

CurveSpec CurveSpec::then(const CurveSpec& next) const {
  if (kind_ == Kind::DeckClosed || next.kind_ == Kind::DeckClosed)
    throw InputError("cannot concatenate deck-closed loops");
  if ((end() - next.start()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + end().cwiseAbs().maxCoeff()))
    throw InputError("concatenated curves do not meet");
  CurveSpec c = *this;
  if (next.kind_ == Kind::Parametric) c.kind_ = Kind::Parametric;
  c.pieces_.insert(c.pieces_.end(), next.pieces_.begin(), next.pieces_.end());
  return c;
}

void CurveSpec::evaluate(const Piece& piece, double u, Vec& position, Vec& velocity) {
  if (!piece.parametric) {
    velocity = piece.to - piece.from;
    position = piece.from + u * velocity;
    return;
  }
  const double s = piece.s0 + u * (piece.s1 - piece.s0);
  const std::size_t n = piece.components.size();
  position.resize(static_cast<int>(n));
  velocity.resize(static_cast<int>(n));
  const double arg[1] = {s};
  for (std::size_t i = 0; i < n; ++i) {
    const Jet1 j = eval_jet1(piece.components[i], std::span<const double>(arg, 1));
    position[static_cast<int>(i)] = j.value;
    velocity[static_cast<int>(i)] = j.grad[0] * (piece.s1 - piece.s0);
  }
}

double CurveSpec::coordinate_length(const Piece& piece) {
  if (!piece.parametric) return (piece.to - piece.from).norm();
  constexpr int kSamples = 32;
  double len = 0.0;
  Vec prev, cur, vel;
  evaluate(piece, 0.0, prev, vel);
  for (int k = 1; k <= kSamples; ++k) {
    evaluate(piece, static_cast<double>(k) / kSamples, cur, vel);
    len += (cur - prev).norm();
    prev = cur;
  }
  return len;
}

// ---------------------------------------------------------------------------
// Transport

TransportResult parallel_transport(const ChartMetric& g, const CurveSpec& c,
                                   const TransportOptions& options) {
  std::vector<int> base_steps;
  double longest = 0.0;
  for (const auto& piece : c.pieces()) {
    const double len = CurveSpec::coordinate_length(piece);
    longest = std::max(longest, len);
    base_steps.push_back(std::max(1, static_cast<int>(std::ceil(options.initial_steps_per_unit * len))));
  }

  TransportResult result;
  result.loop = c;
  if (longest == 0.0) {
    result.matrix = close_deck(c, Mat::Identity(g.dim(), g.dim()));
    result.converged = true;
    return result;
  }

  std::vector<int> steps = base_steps;
  Mat coarse = transport_all(g, c, steps);
  for (int level = 1;; ++level) {
    for (auto& s : steps) s *= 2;
    Mat fine = transport_all(g, c, steps);
    result.err_est = (fine - coarse).cwiseAbs().maxCoeff();
    result.halvings = level;
    coarse = std::move(fine);
    if (result.err_est < options.tolerance) {
      result.converged = true;
      break;
    }
    // Coordinate step of the coarsest-resolved piece.
    double step = 0.0;
    for (std::size_t k = 0; k < steps.size(); ++k)
      step = std::max(step, CurveSpec::coordinate_length(c.pieces()[k]) / steps[k]);
    if (step < options.step_floor) break;
  }
  result.matrix = close_deck(c, coarse);
  return result;
}

Mat parallel_transport_fixed(const ChartMetric& g, const CurveSpec& c, int steps_per_piece) {
  const std::vector<int> steps(c.pieces().size(), steps_per_piece);
  return close_deck(c, transport_all(g, c, steps));
}

CurveSpec coordinate_rectangle_loop(const ChartMetric& g, int i, int j, const Vec& p, double a,
                                    double b) {
  if (i == j || i < 0 || j < 0 || i >= g.dim() || j >= g.dim())
    throw InputError("rectangle loop needs two distinct axes");
  Vec q1 = p, q2 = p, q3 = p;
  q1[i] += a;
  q2[i] += a;
  q2[j] += b;
  q3[j] += b;
  for (const Vec* q : std::initializer_list<const Vec*>{&p, &q1, &q2, &q3})
    if (!g.in_domain(*q)) throw OutsideDomain("rectangle loop exits the domain");
  return CurveSpec::polyline({p, q1, q2, q3, p});
}

// ---------------------------------------------------------------------------
// Geodesics

const char* to_string(GeodesicOutcome o) {
  switch (o) {
    case GeodesicOutcome::Completed: return "completed";
    case GeodesicOutcome::LeftDomain: return "left_domain";
    case GeodesicOutcome::Blowup: return "blowup";
    case GeodesicOutcome::Stalled: return "stalled";
  }
  return "?";
}

namespace {

struct GeodesicState {
  Vec x;
  Vec v;
};

GeodesicState geodesic_rhs(const ChartMetric& g, const GeodesicState& y) {
  g.require_domain(y.x);
  const Christoffel c = christoffel_at(g, y.x);
  const int n = g.dim();
  GeodesicState d;
  d.x = y.v;
  d.v = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += c(k, i, j) * y.v[i] * y.v[j];
    d.v[k] = -s;
  }
  return d;
}

GeodesicState axpy(const GeodesicState& y, double h, const GeodesicState& d) {
  return {y.x + h * d.x, y.v + h * d.v};
}

GeodesicState rk4_step(const ChartMetric& g, const GeodesicState& y, double h) {
  const GeodesicState k1 = geodesic_rhs(g, y);
  const GeodesicState k2 = geodesic_rhs(g, axpy(y, 0.5 * h, k1));
  const GeodesicState k3 = geodesic_rhs(g, axpy(y, 0.5 * h, k2));
  const GeodesicState k4 = geodesic_rhs(g, axpy(y, h, k3));
  return {y.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          y.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

double max_abs(const GeodesicState& y) {
  return std::max(y.x.cwiseAbs().maxCoeff(), y.v.cwiseAbs().maxCoeff());
}

}  // namespace

GeodesicResult integrate_geodesic(const ChartMetric& g, const Vec& p, const TangentVec& v,
                                  double affine_span, double blowup_threshold,
                                  const GeodesicOptions& options) {
  GeodesicResult res;
  GeodesicState y{p, v.comp};
  g.require_domain(p);
  const double e0 = inner(metric_at(g, p), y.v, y.v);
  const double energy_scale = std::max(std::abs(e0), y.v.squaredNorm());
  auto record = [&](double s, double energy) {
    res.samples.push_back({s, y.x, y.v, energy});
  };
  record(0.0, e0);

  double s = 0.0;
  double h = std::min(options.initial_step, affine_span);
  res.max_speed = y.v.norm();
  while (s < affine_span) {
    if (res.steps >= options.max_steps) {
      res.outcome = GeodesicOutcome::Stalled;
      res.reason = "step budget exhausted";
      break;
    }
    const double step = std::min(h, affine_span - s);
    GeodesicState full, half;
    bool failed = false;
    std::string why;
    try {
      full = rk4_step(g, y, step);
      half = rk4_step(g, rk4_step(g, y, 0.5 * step), 0.5 * step);
      if (!g.in_domain(half.x)) throw OutsideDomain("step leaves the domain");
    } catch (const Error& e) {
      failed = true;
      why = e.what();
    }
    if (failed) {
      h = 0.25 * step;
      if (h < 1e-14 * std::max(1.0, std::abs(s))) {
        res.outcome = GeodesicOutcome::LeftDomain;
        res.reason = why;
        break;
      }
      continue;
    }
    const double scale = 1.0 + max_abs(half);
    const double err = std::max((half.x - full.x).cwiseAbs().maxCoeff(),
                                (half.v - full.v).cwiseAbs().maxCoeff()) / scale;
    if (err > options.tolerance) {
      h = step * std::max(0.1, 0.9 * std::pow(options.tolerance / err, 0.2));
      const double speed = y.v.norm();
      if (h < options.blowup_step) {
        res.outcome = speed > blowup_threshold ? GeodesicOutcome::Blowup : GeodesicOutcome::Stalled;
        res.reason = speed > blowup_threshold ? "speed exceeds threshold as the step collapses"
                                              : "step collapsed at bounded speed";
        break;
      }
      continue;
    }
    y.x = half.x + (half.x - full.x) / 15.0;
    y.v = half.v + (half.v - full.v) / 15.0;
    s += step;
    ++res.steps;
    const double speed = y.v.norm();
    res.max_speed = std::max(res.max_speed, speed);
    double energy = 0.0;
    try {
      energy = inner(metric_at(g, y.x), y.v, y.v);
    } catch (const Error& e) {
      res.outcome = GeodesicOutcome::LeftDomain;
      res.reason = e.what();
      break;
    }
    if (std::isfinite(energy))
      res.energy_drift = std::max(res.energy_drift, std::abs(energy - e0) / energy_scale);
    if (res.steps % options.sample_every == 0) record(s, energy);
    if (speed > blowup_threshold && step < options.blowup_step) {
      res.outcome = GeodesicOutcome::Blowup;
      res.reason = "speed exceeds threshold as the step collapses";
      break;
    }
    const double grow = err > 0 ? 0.9 * std::pow(options.tolerance / err, 0.2) : 4.0;
    h = step * std::clamp(grow, 0.1, 4.0);
  }
  res.s_end = s;
  if (res.samples.back().s != s) {
    double energy = 0.0;
    try {
      energy = inner(metric_at(g, y.x), y.v, y.v);
    } catch (const Error&) {
      energy = std::nan("");
    }
    record(s, energy);
  }
  return res;
}

}  // namespace lorhol
