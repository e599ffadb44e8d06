#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"
#include "pb/device/power_model.hpp"

namespace pb::device {

struct DeviceProfile {
  std::string name;
  Os os = Os::android;
  ScreenSize screen{720, 1280};
  bool supports_5ghz = false;
  bool has_cellular = true;
  /// Software battery report period; empty when the OS exposes no readings.
  std::optional<double> report_cadence_s = 30.0;
  double battery_mah = 3000.0;
  PowerModel model;

  // Workload CPU levels (fraction of full load).
  double idle_cpu = 0.02;
  double browser_idle_cpu = 0.06;
  double video_cpu = 0.10;
  double input_bump_cpu = 0.08;
  double input_bump_s = 0.3;

  WifiBand preferred_band() const noexcept { return supports_5ghz ? WifiBand::ghz_5 : WifiBand::ghz_2_4; }
};

/// The four test-bed devices plus three cadence-only presets for newer phones.
const std::vector<DeviceProfile>& builtin_profiles();

/// Throws Errc::not_found for an unknown name.
const DeviceProfile& find_profile(std::string_view name);

struct NetworkProfile {
  std::string name;
  double download_mbps = 0.0;
  double upload_mbps = 0.0;
  double latency_ms = 0.0;
};

/// VPN exit locations, slowest download first.
const std::vector<NetworkProfile>& builtin_network_profiles();
const NetworkProfile& find_network_profile(std::string_view name);

/// Unconstrained link used when no profile is configured.
NetworkProfile local_network();

void to_json(nlohmann::json& j, const DeviceProfile& p);
void to_json(nlohmann::json& j, const NetworkProfile& p);

}  // namespace pb::device
