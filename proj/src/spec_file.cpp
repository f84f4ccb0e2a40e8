#include <lorhol/spec_file.hpp>

#include <lorhol/errors.hpp>

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace lorhol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InputError(path + ": " + message);
}

std::string scalar(const YAML::Node& node, const std::string& path) {
  if (!node || !node.IsScalar()) fail(path, "expected a scalar");
  return node.as<std::string>();
}

Expr expression(const std::string& text, const std::vector<std::string>& coords,
                const std::string& path) {
  try {
    return parse_expr(text, coords);
  } catch (const ParseError& e) {
    std::string what = e.what();
    what = what.substr(0, what.rfind(" at position"));
    throw ParseError(path + ": '" + text + "': " + what, e.position());
  }
}

double number(const YAML::Node& node, const std::string& path) {
  const std::string text = scalar(node, path);
  if (text == "inf" || text == "+inf" || text == "infinity") return kInf;
  if (text == "-inf" || text == "-infinity") return -kInf;
  const Expr e = expression(text, {}, path);
  try {
    return eval(e, std::span<const double>{});
  } catch (const Error& err) {
    fail(path, err.what());
  }
}

std::vector<std::string> names(const YAML::Node& node, const std::string& path) {
  if (!node || !node.IsSequence()) fail(path, "expected a list of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(scalar(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> numbers(const YAML::Node& node, const std::string& path, std::size_t expected) {
  if (!node || !node.IsSequence()) fail(path, "expected a list of numbers");
  if (node.size() != expected)
    fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(node.size()));
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(number(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Interval interval(const YAML::Node& node, const std::string& path) {
  if (node && node.IsScalar() && node.as<std::string>() == "unbounded") return {};
  const auto v = numbers(node, path, 2);
  if (!(v[0] < v[1])) fail(path, "interval needs lo < hi");
  return {v[0], v[1]};
}

std::vector<Interval> intervals(const YAML::Node& node, const std::string& path, std::size_t n) {
  if (!node || !node.IsSequence()) fail(path, "expected one interval per coordinate");
  if (node.size() != n)
    fail(path, "expected " + std::to_string(n) + " intervals, got " + std::to_string(node.size()));
  std::vector<Interval> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(interval(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Upper triangle either as rows (row i holds n - i entries) or flat.
std::vector<std::string> upper_triangle(const YAML::Node& node, const std::string& path, std::size_t n) {
  if (!node || !node.IsSequence()) fail(path, "expected the upper triangle as rows");
  std::vector<std::string> out;
  if (node.size() == n && node[0].IsSequence()) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string row_path = path + "[" + std::to_string(i) + "]";
      const YAML::Node row = node[i];
      if (!row.IsSequence() || row.size() != n - i)
        fail(row_path, "row " + std::to_string(i) + " needs " + std::to_string(n - i) + " entries");
      for (std::size_t j = 0; j < row.size(); ++j)
        out.push_back(scalar(row[j], row_path + "[" + std::to_string(j) + "]"));
    }
    return out;
  }
  if (node.size() != n * (n + 1) / 2)
    fail(path, "expected " + std::to_string(n) + " rows or " + std::to_string(n * (n + 1) / 2) + " entries");
  for (std::size_t k = 0; k < node.size(); ++k)
    out.push_back(scalar(node[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

Identification identification(const YAML::Node& node, const std::string& path, std::size_t n) {
  if (!node || !node.IsMap()) fail(path, "expected a map with kind, matrix, offset");
  const std::string kind = scalar(node["kind"], path + ".kind");
  const Vec offset = node["offset"] ? to_vec(numbers(node["offset"], path + ".offset", n))
                                    : Vec(Vec::Zero(static_cast<int>(n)));
  if (kind == "translation") return Identification::translation(offset);
  if (kind != "linear") fail(path + ".kind", "expected translation or linear, got '" + kind + "'");
  const YAML::Node rows = node["matrix"];
  if (!rows || !rows.IsSequence() || rows.size() != n) fail(path + ".matrix", "expected n rows");
  Mat m(static_cast<int>(n), static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = numbers(rows[i], path + ".matrix[" + std::to_string(i) + "]", n);
    for (std::size_t j = 0; j < n; ++j) m(static_cast<int>(i), static_cast<int>(j)) = row[j];
  }
  if (std::abs(m.determinant()) < 1e-12) fail(path + ".matrix", "matrix is singular");
  return Identification::linear(m, offset);
}

std::string format_point(const Vec& p) {
  std::string out = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", p[i]);
    out += buf;
  }
  return out + ")";
}

DeformationFamily deformation(const YAML::Node& node) {
  const std::string path = "deformation";
  if (!node.IsMap()) fail(path, "expected a map");
  const auto coords = names(node["coords"], path + ".coords");
  const std::size_t m = coords.size();
  const auto s_metric = upper_triangle(node["s_metric"], path + ".s_metric", m);
  std::vector<std::string> alpha;
  if (!node["alpha"] || !node["alpha"].IsSequence() || node["alpha"].size() != m)
    fail(path + ".alpha", "expected one component per spatial coordinate");
  for (std::size_t a = 0; a < m; ++a)
    alpha.push_back(scalar(node["alpha"][a], path + ".alpha[" + std::to_string(a) + "]"));
  for (std::size_t k = 0; k < s_metric.size(); ++k)
    expression(s_metric[k], coords, path + ".s_metric");
  for (const auto& a : alpha) expression(a, coords, path + ".alpha");
  const auto box = intervals(node["box"], path + ".box", m);
  const auto domain = node["domain"] ? intervals(node["domain"], path + ".domain", m)
                                     : std::vector<Interval>(m, Interval{});
  const Interval t_box = node["t_box"] ? interval(node["t_box"], path + ".t_box") : Interval{-1.0, 1.0};
  const std::string name = node["name"] ? scalar(node["name"], path + ".name") : "deformation";
  return make_deformation_family(name, coords, s_metric, alpha, domain, box, t_box);
}

LoadedSpec load(const YAML::Node& root) {
  if (!root.IsMap()) throw InputError("spec file must be a YAML map");
  const std::string name = scalar(root["name"], "name");
  const auto coords = names(root["coords"], "coords");
  const std::size_t n = coords.size();
  if (root["dim"]) {
    const double dim = number(root["dim"], "dim");
    if (dim != static_cast<double>(n)) fail("dim", "does not match the number of coordinates");
  }
  if (n < 2 || n > static_cast<std::size_t>(kMaxDim)) fail("coords", "dimension must be between 2 and 6");

  const auto upper = upper_triangle(root["components"], "components", n);
  std::vector<Expr> comps;
  for (std::size_t k = 0; k < upper.size(); ++k)
    comps.push_back(expression(upper[k], coords, "components[" + std::to_string(k) + "]"));

  const auto domain = root["domain"] ? intervals(root["domain"], "domain", n)
                                     : std::vector<Interval>(n, Interval{});
  const auto box = intervals(root["box"], "box", n);

  std::vector<Identification> ids;
  if (root["identifications"]) {
    if (!root["identifications"].IsSequence()) fail("identifications", "expected a list");
    for (std::size_t k = 0; k < root["identifications"].size(); ++k)
      ids.push_back(identification(root["identifications"][k], "identifications[" + std::to_string(k) + "]", n));
  }

  std::vector<Expr> orientation;
  const YAML::Node to = root["time_orientation"];
  if (!to || !to.IsSequence() || to.size() != n)
    fail("time_orientation", "expected one expression per coordinate");
  for (std::size_t k = 0; k < n; ++k)
    orientation.push_back(expression(scalar(to[k], "time_orientation"), coords,
                                     "time_orientation[" + std::to_string(k) + "]"));

  LoadedSpec out;
  try {
    out.metric = ChartMetric(name, coords, comps, domain, box, ids, orientation);
  } catch (const InputError& e) {
    fail("metric", e.what());
  }
  if (root["default_point"]) out.metric.set_default_point(to_vec(numbers(root["default_point"], "default_point", n)));

  const SignatureReport sig = signature_check(out.metric, kSpecSignatureSamples, 0);
  if (!sig.ok) throw InputError("signature check failed at " + format_point(sig.worst_point) + ": " + sig.message);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const double dev = identification_deviation(out.metric, ids[k], kSpecIdentificationGrid);
    if (dev > kIsometryTolerance) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "identifications[%zu]: not an isometry, max deviation %.3g", k, dev);
      throw InputError(buf);
    }
  }
  if (root["deformation"]) out.deformation = deformation(root["deformation"]);
  return out;
}

}  // namespace

LoadedSpec load_spec_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError("spec file: " + e.msg + " (line " + std::to_string(e.mark.line + 1) + ", column " +
                         std::to_string(e.mark.column + 1) + ")",
                     static_cast<std::size_t>(e.mark.pos < 0 ? 0 : e.mark.pos));
  }
  try {
    return load(root);
  } catch (const YAML::Exception& e) {
    throw InputError("spec file: " + e.msg);
  }
}

LoadedSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spec file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_spec_text(buffer.str());
}

bool metrics_structurally_equal(const ChartMetric& a, const ChartMetric& b) {
  if (a.dim() != b.dim() || a.coords() != b.coords()) return false;
  const int n = a.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!structurally_equal(a.component(i, j), b.component(i, j))) return false;
  for (int i = 0; i < n; ++i) {
    const auto& da = a.domain()[static_cast<std::size_t>(i)];
    const auto& db = b.domain()[static_cast<std::size_t>(i)];
    const auto& ba = a.box()[static_cast<std::size_t>(i)];
    const auto& bb = b.box()[static_cast<std::size_t>(i)];
    if (da.lo != db.lo || da.hi != db.hi || ba.lo != bb.lo || ba.hi != bb.hi) return false;
    if (!structurally_equal(a.time_orientation()[static_cast<std::size_t>(i)],
                            b.time_orientation()[static_cast<std::size_t>(i)]))
      return false;
  }
  if (a.identifications().size() != b.identifications().size()) return false;
  for (std::size_t k = 0; k < a.identifications().size(); ++k) {
    const auto& ia = a.identifications()[k];
    const auto& ib = b.identifications()[k];
    if (ia.kind != ib.kind || ia.matrix != ib.matrix || ia.offset != ib.offset) return false;
  }
  return a.default_point() == b.default_point();
}

}  // namespace lorhol
