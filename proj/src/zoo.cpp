#include <lorhol/zoo.hpp>

#include <lorhol/errors.hpp>

#include <limits>
#include <numbers>

namespace lorhol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

const Interval kLine{-kInf, kInf};
const Interval kPolar{0.0, kPi};
const Interval kPolarBox{0.2, kPi - 0.2};
const Interval kAzimuthBox{-kPi, kPi};

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ChartMetric minkowski(const std::string& name, int n, std::vector<Identification> ids,
                      double half_width) {
  static const std::vector<std::string> kNames{"t", "x", "y", "z", "w", "u"};
  std::vector<std::string> coords(kNames.begin(), kNames.begin() + n);
  std::vector<std::string> upper;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) upper.push_back(i != j ? "0" : (i == 0 ? "-1" : "1"));
  std::vector<std::string> orientation(static_cast<std::size_t>(n), "0");
  orientation[0] = "1";
  auto g = make_metric(name, coords, upper, std::vector<Interval>(static_cast<std::size_t>(n), kLine),
                       std::vector<Interval>(static_cast<std::size_t>(n), {-half_width, half_width}),
                       std::move(ids), orientation);
  g.set_default_point(Vec::Zero(n));
  return g;
}

ChartMetric line_times_sphere2(const std::string& name, std::vector<Identification> ids) {
  auto g = make_metric(name, {"t", "theta", "phi"},
                       {"-1", "0", "0",
                              "1", "0",
                                   "sin(theta)^2"},
                       {kLine, kPolar, kLine}, {{-5.0, 5.0}, kPolarBox, kAzimuthBox}, std::move(ids),
                       {"1", "0", "0"});
  g.set_default_point(vec({0.0, kPi / 2, 0.0}));
  return g;
}

}  // namespace

ChartMetric make_metric(std::string name, std::vector<std::string> coords,
                        const std::vector<std::string>& upper, std::vector<Interval> domain,
                        std::vector<Interval> box, std::vector<Identification> identifications,
                        const std::vector<std::string>& time_orientation) {
  std::vector<Expr> comps;
  comps.reserve(upper.size());
  for (const auto& s : upper) comps.push_back(parse_expr(s, coords));
  std::vector<Expr> orient;
  for (const auto& s : time_orientation) orient.push_back(parse_expr(s, coords));
  return ChartMetric(std::move(name), std::move(coords), std::move(comps), std::move(domain),
                     std::move(box), std::move(identifications), std::move(orient));
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"minkowski2", "minkowski4", "clifton_pohl",
                                              "r_x_s2",     "r_x_s3",     "s1_x_s2",
                                              "flat_torus2", "rt_rx_s2"};
  return names;
}

ChartMetric builtin(const std::string& name) {
  if (name == "minkowski2") return minkowski(name, 2, {}, 5.0);
  if (name == "minkowski4") return minkowski(name, 4, {}, 5.0);
  if (name == "flat_torus2")
    return minkowski(name, 2,
                     {Identification::translation(vec({4.0, 0.0})),
                      Identification::translation(vec({0.0, 4.0}))},
                     2.0);
  if (name == "clifton_pohl") {
    // 2 dx dy / (x^2 + y^2) on the half-plane x > 0, which the scaling
    // (x, y) -> (2x, 2y) preserves. The box is a fundamental region around (1, 1).
    Mat scale = Mat::Identity(2, 2) * 2.0;
    auto g = make_metric(name, {"x", "y"}, {"0", "1/(x^2+y^2)", "0"},
                         {{0.0, kInf}, kLine}, {{0.25, 4.0}, {0.25, 4.0}},
                         {Identification::linear(scale, Vec::Zero(2))}, {"1", "-1"});
    g.set_default_point(vec({1.0, 1.0}));
    return g;
  }
  if (name == "r_x_s2") return line_times_sphere2(name, {});
  if (name == "s1_x_s2")
    return line_times_sphere2(name, {Identification::translation(vec({2 * kPi, 0.0, 0.0}))});
  if (name == "r_x_s3") {
    auto g = make_metric(name, {"t", "chi", "theta", "phi"},
                         {"-1", "0", "0", "0",
                                "1", "0", "0",
                                     "sin(chi)^2", "0",
                                                   "sin(chi)^2*sin(theta)^2"},
                         {kLine, kPolar, kPolar, kLine},
                         {{-5.0, 5.0}, kPolarBox, kPolarBox, kAzimuthBox}, {},
                         {"1", "0", "0", "0"});
    g.set_default_point(vec({0.0, kPi / 2, kPi / 2, 0.0}));
    return g;
  }
  if (name == "rt_rx_s2") {
    auto g = make_metric(name, {"t", "x", "theta", "phi"},
                         {"-1", "0", "0", "0",
                                "1", "0", "0",
                                     "1", "0",
                                          "sin(theta)^2"},
                         {kLine, kLine, kPolar, kLine},
                         {{-5.0, 5.0}, {-5.0, 5.0}, kPolarBox, kAzimuthBox}, {},
                         {"1", "0", "0", "0"});
    g.set_default_point(vec({0.0, 0.0, kPi / 2, 0.0}));
    return g;
  }
  std::string list;
  for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
  throw InputError("unknown builtin metric '" + name + "' (available: " + list + ")");
}

}  // namespace lorhol
