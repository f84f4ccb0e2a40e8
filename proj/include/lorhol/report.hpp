#pragma once

// Pipelines behind the command-line subcommands, emitting JSON reports.

#include <lorhol/deformation.hpp>
#include <lorhol/geometry.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lorhol {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "lorhol.report/1";

enum ExitCode { kExitOk = 0, kExitInput = 1, kExitUnconverged = 2 };

struct ReportOptions {
  std::string command = "report";
  std::uint64_t seed = 0;
  int budget = 50;
  std::optional<Vec> point;
  std::optional<Vec> direction;
  std::optional<double> r;
  int grid = 5;
  double span = 100.0;
  int trials = 10000;
  int samples = 200;        // nullsec planes
  int word_len = 16;        // Haar averaging
  long words = 10000;
  std::vector<std::string> slice;  // coordinate names held constant
  std::optional<ChartMetric> other;
  std::vector<Interval> core_box;
};

struct Report {
  nlohmann::ordered_json json;
  int exit_code = kExitOk;
};

const std::vector<std::string>& report_commands();

// Throws InputError for an unknown command or unusable options.
Report run_report(const ChartMetric& g, const std::optional<DeformationFamily>& deformation,
                  const ReportOptions& options);

}  // namespace lorhol
