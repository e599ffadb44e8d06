#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pb::device {

struct LoadSegment {
  double duration_s = 0.0;
  double cpu = 0.0;             ///< browser CPU load while the segment runs
  double bandwidth_mbps = 0.0;  ///< demanded download rate
};

/// Piecewise-constant resource demand of one page load, starting when the
/// first response byte arrives.
struct PageLoadProfile {
  std::vector<LoadSegment> segments;

  double duration_s() const noexcept;
  /// Bytes fetched on an unconstrained link.
  std::uint64_t page_bytes() const noexcept;
};

/// Returns nothing when the URL does not resolve.
using PageResolver = std::function<std::optional<PageLoadProfile>(const std::string& url)>;

inline constexpr double kLoadBurstSeconds = 6.0;

/// Seeded profile: a heavy burst over the first six seconds, then a light
/// tail of late scripts and ads out to 30 s.
PageLoadProfile synthetic_page_profile(std::string_view url, std::uint64_t seed);

void to_json(nlohmann::json& j, const LoadSegment& s);
void from_json(const nlohmann::json& j, LoadSegment& s);
void to_json(nlohmann::json& j, const PageLoadProfile& p);
void from_json(const nlohmann::json& j, PageLoadProfile& p);

}  // namespace pb::device
