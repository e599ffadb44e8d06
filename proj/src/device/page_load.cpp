#include "pb/device/page_load.hpp"

#include <cmath>
#include <random>

#include "pb/common/random.hpp"

namespace pb::device {

double PageLoadProfile::duration_s() const noexcept {
  double d = 0.0;
  for (const auto& s : segments) d += s.duration_s;
  return d;
}

std::uint64_t PageLoadProfile::page_bytes() const noexcept {
  double bytes = 0.0;
  for (const auto& s : segments) bytes += s.bandwidth_mbps * 1e6 / 8.0 * s.duration_s;
  return static_cast<std::uint64_t>(std::llround(bytes));
}

PageLoadProfile synthetic_page_profile(std::string_view url, std::uint64_t seed) {
  std::mt19937_64 rng(fnv1a(url, seed ^ 0x9e3779b97f4a7c15ULL));
  PageLoadProfile p;
  const double heaviness = uniform(rng, 0.6, 1.0);
  for (int i = 0; i < 3; ++i) {
    p.segments.push_back({kLoadBurstSeconds / 3, heaviness * uniform(rng, 0.45, 0.70), uniform(rng, 2.0, 9.0)});
  }
  for (int i = 0; i < 4; ++i) {
    p.segments.push_back({6.0, uniform(rng, 0.06, 0.20), uniform(rng, 0.05, 0.6)});
  }
  return p;
}

void to_json(nlohmann::json& j, const LoadSegment& s) {
  j = {{"duration_s", s.duration_s}, {"cpu", s.cpu}, {"bandwidth_mbps", s.bandwidth_mbps}};
}

void from_json(const nlohmann::json& j, LoadSegment& s) {
  s.duration_s = j.at("duration_s").get<double>();
  s.cpu = j.at("cpu").get<double>();
  s.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
}

void to_json(nlohmann::json& j, const PageLoadProfile& p) { j = p.segments; }

void from_json(const nlohmann::json& j, PageLoadProfile& p) { p.segments = j.get<std::vector<LoadSegment>>(); }

}  // namespace pb::device
