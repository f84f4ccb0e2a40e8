#pragma once

// Metric spec files. The format is YAML; docs/spec-format.md has the grammar.

#include <lorhol/deformation.hpp>
#include <lorhol/geometry.hpp>

#include <optional>
#include <string>

namespace lorhol {

inline constexpr int kSpecSignatureSamples = 256;
inline constexpr int kSpecIdentificationGrid = 10;  // per axis
inline constexpr double kIsometryTolerance = 1e-8;

struct LoadedSpec {
  ChartMetric metric;
  std::optional<DeformationFamily> deformation;
};

// Parses and validates (signature at seeded samples, identifications are
// isometries). Errors are InputError / ParseError carrying the key path.
LoadedSpec load_spec_text(const std::string& text);
LoadedSpec load_spec(const std::string& path);

// Same coordinates, component trees, domain, box, identifications and time
// orientation.
bool metrics_structurally_equal(const ChartMetric& a, const ChartMetric& b);

}  // namespace lorhol
