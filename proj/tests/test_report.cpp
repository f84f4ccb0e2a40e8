#include <lorhol/errors.hpp>
#include <lorhol/report.hpp>
#include <lorhol/zoo.hpp>

#include "support.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

using namespace lorhol;
using namespace lorhol::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(LORHOL_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json parse(const Run& r) { return nlohmann::json::parse(r.out); }

const std::string kDocs = LORHOL_DOCS_DIR;
const std::string kData = LORHOL_TEST_DATA;

}  // namespace

TEST_CASE("holonomy report on minkowski4") {
  ReportOptions o;
  o.command = "holonomy";
  o.seed = 1;
  const Report r = run_report(builtin("minkowski4"), std::nullopt, o);
  CHECK(r.exit_code == kExitOk);
  const auto& j = r.json;
  CHECK(j["schema"] == kReportSchema);
  CHECK(j["tool"]["version"] == kToolVersion);
  CHECK(j["seed"] == 1);
  CHECK(j["budget"] == 50);
  CHECK(j["qualifier"] == "on the sampled region");
  CHECK(j["tolerances"]["fixed_subspace"] == kFixedTolerance);
  CHECK(j["tolerances"]["gram_sign"] == kGramTolerance);
  CHECK(j["results"]["verdict"]["kind"] == "precompact_timelike");
  CHECK(j["results"]["k"] == 4);
  CHECK(j["results"]["compactness_with_finite_fundamental_group"] == "not decidable numerically");
}

TEST_CASE("holonomy report on clifton-pohl shows the boost") {
  ReportOptions o;
  o.command = "holonomy";
  o.seed = 1;
  const Report r = run_report(builtin("clifton_pohl"), std::nullopt, o);
  const auto& res = r.json["results"];
  CHECK(res["verdict"]["kind"] == "not_precompact");
  const auto& ev = res["extreme_generator"]["eigenvalues"];
  REQUIRE(ev.size() == 2);
  const double big = ev[0][0], small = ev[1][0];
  CHECK(big >= 1.01);
  CHECK(big * small == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ev[0][1] == 0.0);
}

TEST_CASE("nullsec report on r_x_s3") {
  ReportOptions o;
  o.command = "nullsec";
  o.point = vec({0.0, 1.0, 1.0, 1.0});
  const Report r = run_report(builtin("r_x_s3"), std::nullopt, o);
  const auto& res = r.json["results"];
  CHECK(res["nullsec_pointwise"] == true);
  CHECK(res["value"].get<double>() > 0.0);
  CHECK(res["nullsec_sign"] == "positive");
}

TEST_CASE("option errors") {
  ReportOptions o;
  o.command = "holonomy";
  o.point = vec({1.0});
  CHECK_THROWS_AS(run_report(builtin("minkowski2"), std::nullopt, o), InputError);
  o.point.reset();
  o.budget = 0;
  CHECK_THROWS_AS(run_report(builtin("minkowski2"), std::nullopt, o), InputError);
  o.budget = 5;
  o.command = "teleport";
  CHECK_THROWS_AS(run_report(builtin("minkowski2"), std::nullopt, o), InputError);
}

TEST_CASE("cli exit codes") {
  CHECK(cli("holonomy --builtin minkowski2 --budget 5").code == 0);
  CHECK(cli("holonomy --builtin no_such_metric").code == 1);
  CHECK(cli("holonomy").code == 1);
  CHECK(cli("holonomy --builtin minkowski2 --point 1,2,3").code == 1);
  CHECK(cli("holonomy --builtin minkowski2 --budget x").code == 1);
  CHECK(cli("teleport --builtin minkowski2").code == 1);
  CHECK(cli("holonomy --spec " + kData + "/missing.yaml").code == 1);
  CHECK(cli("holonomy --spec " + kData + "/wiggle.yaml --budget 3").code == 2);
  const Run list = cli("list");
  CHECK(list.code == 0);
  CHECK(list.out.find("clifton_pohl") != std::string::npos);
}

TEST_CASE("cli reports are byte-identical across runs") {
  for (const std::string& args : std::vector<std::string>{"holonomy --builtin r_x_s2 --budget 20 --seed 3",
                                 "covering --builtin s1_x_s2 --budget 10 --seed 2",
                                 "deform --trials 2000 --seed 5",
                                 "nullsec --spec " + kDocs + "/specs/tilted_flat.yaml"}) {
    const Run a = cli(args);
    const Run b = cli(args);
    CHECK_MESSAGE(a.code == 0, args);
    CHECK_MESSAGE(a.out == b.out, args);
    CHECK(parse(a)["status"] == "ok");
  }
  CHECK(cli("holonomy --builtin r_x_s2 --budget 20 --seed 3").out !=
        cli("holonomy --builtin r_x_s2 --budget 20 --seed 4").out);
}

TEST_CASE("every subcommand runs") {
  const char* runs[] = {
      "holonomy --builtin r_x_s2 --budget 10",
      "parallel-vector --builtin r_x_s2 --budget 10",
      "parallel-system --builtin rt_rx_s2 --budget 10",
      "relative-holonomy --builtin rt_rx_s2 --slice t,x --budget 10",
      "covering --builtin flat_torus2 --budget 10",
      "flip --builtin r_x_s2 --budget 10 --grid 4",
      "nullsec --builtin r_x_s3",
      "geodesic --builtin clifton_pohl --direction 1,0 --span 10",
      "deform --r 0.5 --trials 500",
      "report --builtin s1_x_s2 --budget 10 --grid 4 --span 50",
  };
  for (const char* args : runs) {
    const Run r = cli(args);
    CHECK_MESSAGE(r.code == 0, args);
    CHECK_MESSAGE(parse(r)["status"] == "ok", args);
  }
  const Run d = cli("diff-support --spec " + kDocs + "/specs/bumped_minkowski2.yaml --other-builtin minkowski2 --core-box=-1:1,-1:1 --grid 11");
  CHECK(d.code == 0);
  CHECK(parse(d)["results"]["compact_support"] == true);
}
