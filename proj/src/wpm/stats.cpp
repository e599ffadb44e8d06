#include "pb/wpm/stats.hpp"

#include <algorithm>
#include <vector>

#include "pb/common/error.hpp"

namespace pb::wpm {

std::optional<double> median(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double nearest_rank(std::span<const double> values, int percent) {
  if (values.empty()) throw Error(Errc::validation, "percentile of an empty sample");
  if (percent <= 0 || percent > 100) throw Error(Errc::range, "percentile must be in (0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  // integer ceil avoids 0.25 * 10 landing on either side of 2.5
  const std::size_t rank = (static_cast<std::size_t>(percent) * v.size() + 99) / 100;
  return v[std::max<std::size_t>(rank, 1) - 1];
}

std::optional<CpuPercentiles> cpu_percentiles(std::span<const double> samples) {
  if (samples.empty()) return std::nullopt;
  return CpuPercentiles{nearest_rank(samples, 25), nearest_rank(samples, 50), nearest_rank(samples, 75)};
}

void to_json(nlohmann::json& j, const CpuPercentiles& p) { j = {{"p25", p.p25}, {"p50", p.p50}, {"p75", p.p75}}; }

void from_json(const nlohmann::json& j, CpuPercentiles& p) {
  p.p25 = j.at("p25").get<double>();
  p.p50 = j.at("p50").get<double>();
  p.p75 = j.at("p75").get<double>();
}

}  // namespace pb::wpm
