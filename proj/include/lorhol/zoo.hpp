#pragma once

// Built-in example metrics.

#include <lorhol/geometry.hpp>

#include <string>
#include <vector>

namespace lorhol {

const std::vector<std::string>& builtin_names();

// Throws InputError listing the available names when `name` is unknown.
ChartMetric builtin(const std::string& name);

// Helper used by the builtins and the spec loader: parses the upper-triangle
// component strings and the time orientation against `coords`.
ChartMetric make_metric(std::string name, std::vector<std::string> coords,
                        const std::vector<std::string>& upper, std::vector<Interval> domain,
                        std::vector<Interval> box, std::vector<Identification> identifications,
                        const std::vector<std::string>& time_orientation);

}  // namespace lorhol
