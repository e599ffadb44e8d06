#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace pb::scenarios {

/// One preset coefficient re-derived from its measurement anchor.
struct CalibratedValue {
  std::string profile;
  std::string coefficient;
  double shipped = 0.0;
  double solved = 0.0;
  std::string anchor;

  bool matches(double tolerance) const noexcept;
};

/// Re-derives every anchored preset coefficient. Idle bases and the
/// mirroring coefficients are closed form; the SMJ337A base needs a
/// noise-free simulation of the replayed news workload, so this takes a
/// couple of seconds.
std::vector<CalibratedValue> calibrate_presets();

void to_json(nlohmann::json& j, const CalibratedValue& v);

}  // namespace pb::scenarios
