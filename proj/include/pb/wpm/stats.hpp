#pragma once

#include <optional>
#include <span>

#include <json.hpp>

namespace pb::wpm {

/// Middle element, or the mean of the two middle elements for even counts.
/// Empty input has no median.
std::optional<double> median(std::span<const double> values);

struct CpuPercentiles {
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;

  bool operator==(const CpuPercentiles&) const = default;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double nearest_rank(std::span<const double> values, int percent);
std::optional<CpuPercentiles> cpu_percentiles(std::span<const double> samples);

void to_json(nlohmann::json& j, const CpuPercentiles& p);
void from_json(const nlohmann::json& j, CpuPercentiles& p);

}  // namespace pb::wpm
