// lorhol: holonomy lab command line.
//
//   lorhol holonomy --builtin r_x_s2 --budget 50 --seed 1
//   lorhol nullsec --spec metric.yaml --point "0,1,1,1"

#include <lorhol/deformation.hpp>
#include <lorhol/errors.hpp>
#include <lorhol/report.hpp>
#include <lorhol/spec_file.hpp>
#include <lorhol/zoo.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace lorhol;

std::vector<double> parse_csv(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(eval(parse_expr(item, {}), std::span<const double>{}));
    } catch (const Error& e) {
      throw InputError(flag + ": cannot read '" + item + "': " + e.what());
    }
  }
  if (out.empty()) throw InputError(flag + ": empty list");
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

std::vector<Interval> parse_box(const std::string& text) {
  std::vector<Interval> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("--core-box: expected lo:hi, got '" + item + "'");
    const auto lo = parse_csv(item.substr(0, colon), "--core-box");
    const auto hi = parse_csv(item.substr(colon + 1), "--core-box");
    out.push_back({lo.front(), hi.front()});
  }
  return out;
}

struct Source {
  std::string spec;
  std::string builtin;
};

LoadedSpec load_source(const Source& s, const std::string& which) {
  if (s.spec.empty() == s.builtin.empty())
    throw InputError("give exactly one of --" + which + "spec or --" + which + "builtin");
  if (!s.builtin.empty()) return LoadedSpec{builtin(s.builtin), std::nullopt};
  return load_spec(s.spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical Lorentzian holonomy lab"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Source source, other;
  ReportOptions opt;
  std::string point, direction, core_box, slice;
  double r = -1.0;
  int indent = 2;

  app.add_option("--spec", source.spec, "metric spec file (YAML)");
  app.add_option("--builtin", source.builtin, "built-in metric name");
  app.add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  app.add_option("--budget", opt.budget, "number of sampled loops")->capture_default_str();
  app.add_option("--point", point, "base point, comma separated");
  app.add_option("--direction", direction, "tangent vector, comma separated");
  app.add_option("--r", r, "deformation parameter in [0,1] (default: 0,0.25,0.5,0.75,1)");
  app.add_option("--grid", opt.grid, "grid nodes per axis")->capture_default_str();
  app.add_option("--span", opt.span, "geodesic affine span")->capture_default_str();
  app.add_option("--trials", opt.trials, "speed-bound trials")->capture_default_str();
  app.add_option("--samples", opt.samples, "degenerate planes for nullsec")->capture_default_str();
  app.add_option("--word-len", opt.word_len, "word length for averaging")->capture_default_str();
  app.add_option("--words", opt.words, "word samples for averaging")->capture_default_str();
  app.add_option("--slice", slice, "held coordinates for relative-holonomy, comma separated");
  app.add_option("--other-spec", other.spec, "second metric for diff-support");
  app.add_option("--other-builtin", other.builtin, "second built-in metric for diff-support");
  app.add_option("--core-box", core_box, "core box for diff-support, lo:hi per axis");
  app.add_option("--json-indent", indent, "JSON indentation (-1 for one line)")->capture_default_str();

  const std::map<std::string, std::string> about{
      {"holonomy", "sample loop holonomy and decide precompactness"},
      {"parallel-vector", "average a timelike vector over the sample and extend it"},
      {"parallel-system", "orthonormal parallel frame of the fixed subspace"},
      {"relative-holonomy", "holonomy along a coordinate slice"},
      {"covering", "compare cover and quotient holonomy"},
      {"flip", "flip metric and connection coincidence"},
      {"nullsec", "null sectional curvature at a point"},
      {"geodesic", "integrate one geodesic, with a refined rerun"},
      {"deform", "checks on the deformation family"},
      {"diff-support", "sup of the difference of two metrics outside a core box"},
      {"report", "every applicable section in one report"}};
  for (const auto& cmd : report_commands()) {
    const auto it = about.find(cmd);
    app.add_subcommand(cmd, it == about.end() ? "" : it->second)->fallthrough();
  }
  app.add_subcommand("list", "list built-in metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "list") {
      for (const auto& name : builtin_names()) std::cout << name << "\n";
      return kExitOk;
    }
    opt.command = sub->get_name();
    LoadedSpec spec;
    if (opt.command == "deform" && source.spec.empty() && source.builtin.empty()) {
      const DeformationFamily fam = flat_deformation_family();
      spec = LoadedSpec{build_deformation(fam, 0.0), fam};
    } else {
      spec = load_source(source, "");
    }
    if (!point.empty()) opt.point = to_vec(parse_csv(point, "--point"));
    if (!direction.empty()) opt.direction = to_vec(parse_csv(direction, "--direction"));
    if (r >= 0.0 || app.count("--r")) opt.r = r;
    if (!slice.empty()) {
      std::stringstream ss(slice);
      std::string item;
      while (std::getline(ss, item, ',')) opt.slice.push_back(item);
    }
    if (!other.spec.empty() || !other.builtin.empty()) opt.other = load_source(other, "other-").metric;
    if (!core_box.empty()) opt.core_box = parse_box(core_box);

    const Report rep = run_report(spec.metric, spec.deformation, opt);
    std::cout << rep.json.dump(indent) << "\n";
    return rep.exit_code;
  } catch (const InputError& e) {
    std::cerr << "lorhol: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "lorhol: " << e.what() << "\n";
    return kExitInput;
  }
}
