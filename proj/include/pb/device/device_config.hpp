#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/device/sim_device.hpp"

namespace pb::device {

/// App preinstalled on a device; last use is given in days before the
/// device clock starts.
struct AppSpec {
  AppRecord record;
  std::optional<Scene> scene;
};

struct DeviceConfig {
  DeviceId device_id;
  std::string profile;
  std::uint64_t seed = 1;
  std::optional<double> noise_ma;
  std::vector<AppSpec> apps;
  std::optional<Scene> home_scene;
  std::vector<WorkloadEvent> workload;
  std::optional<std::string> network;
};

inline constexpr const char* kBraveBrowser = "com.brave.browser";
inline constexpr const char* kChromeBrowser = "com.android.chrome";
inline constexpr const char* kVideoPlayer = "com.example.videoplayer";
inline constexpr const char* kNewsReader = "com.example.news";
inline constexpr const char* kSettingsApp = "com.android.settings";

/// Two browsers, a video player, a news reader and a system settings app,
/// all used within the last day.
std::vector<AppSpec> standard_apps();

/// Config document: {"devices": [{"device_id", "profile", "seed", "noise_ma",
/// "apps": [{"id", "kind", "system", "last_used_days_ago", "scene"}],
/// "home_scene", "workload": [...], "network"}]}. A device without "apps"
/// gets standard_apps().
std::vector<DeviceConfig> parse_device_configs(const nlohmann::json& doc);
std::vector<DeviceConfig> load_device_configs(const std::filesystem::path& path);

std::unique_ptr<SimDevice> build_device(const DeviceConfig& cfg, double sample_rate = kDefaultSampleRate);
/// Same, with an explicit profile instead of the named preset.
std::unique_ptr<SimDevice> build_device(const DeviceConfig& cfg, const DeviceProfile& profile,
                                        double sample_rate = kDefaultSampleRate);

}  // namespace pb::device
