#include "pb/device/device_config.hpp"

#include <fstream>

#include "pb/common/error.hpp"

namespace pb::device {

namespace {

constexpr double kDay = 86400.0;

AppKind kind_from(const std::string& s) {
  if (s == "browser") return AppKind::browser;
  if (s == "video") return AppKind::video;
  if (s == "generic") return AppKind::generic;
  throw Error(Errc::validation, "unknown app kind '" + s + "'");
}

}  // namespace

std::vector<AppSpec> standard_apps() {
  auto app = [](const char* id, AppKind kind, bool system = false) {
    return AppSpec{AppRecord{id, kind, system, -30 * kDay, -0.5 * kDay, false}, std::nullopt};
  };
  return {app(kBraveBrowser, AppKind::browser), app(kChromeBrowser, AppKind::browser),
          app(kVideoPlayer, AppKind::video), app(kNewsReader, AppKind::generic),
          app(kSettingsApp, AppKind::generic, true)};
}

std::vector<DeviceConfig> parse_device_configs(const nlohmann::json& doc) {
  std::vector<DeviceConfig> out;
  for (const auto& d : doc.at("devices")) {
    DeviceConfig cfg;
    cfg.device_id = d.at("device_id").get<std::string>();
    cfg.profile = d.at("profile").get<std::string>();
    find_profile(cfg.profile);
    cfg.seed = d.value("seed", std::uint64_t{1});
    if (d.contains("noise_ma")) cfg.noise_ma = d["noise_ma"].get<double>();
    if (d.contains("apps")) {
      for (const auto& a : d["apps"]) {
        AppSpec spec;
        spec.record.id = a.at("id").get<std::string>();
        spec.record.kind = kind_from(a.value("kind", std::string("generic")));
        spec.record.system = a.value("system", false);
        spec.record.last_used = -a.value("last_used_days_ago", 0.0) * kDay;
        spec.record.installed_at = std::min(spec.record.last_used, -a.value("installed_days_ago", 30.0) * kDay);
        if (a.contains("scene")) spec.scene = a["scene"].get<Scene>();
        cfg.apps.push_back(std::move(spec));
      }
    } else {
      cfg.apps = standard_apps();
    }
    if (d.contains("home_scene")) cfg.home_scene = d["home_scene"].get<Scene>();
    if (d.contains("workload")) cfg.workload = d["workload"].get<std::vector<WorkloadEvent>>();
    if (d.contains("network")) cfg.network = d["network"].get<std::string>();
    for (const auto& prev : out) {
      if (prev.device_id == cfg.device_id) throw Error(Errc::validation, "duplicate device id '" + cfg.device_id + "'");
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

std::vector<DeviceConfig> load_device_configs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open device config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, std::string("device config: ") + e.what());
  }
  return parse_device_configs(doc);
}

std::unique_ptr<SimDevice> build_device(const DeviceConfig& cfg, double sample_rate) {
  return build_device(cfg, find_profile(cfg.profile), sample_rate);
}

std::unique_ptr<SimDevice> build_device(const DeviceConfig& cfg, const DeviceProfile& profile, double sample_rate) {
  auto dev = std::make_unique<SimDevice>(cfg.device_id, profile, cfg.seed, sample_rate);
  if (cfg.noise_ma) dev->set_noise(*cfg.noise_ma);
  for (const auto& a : cfg.apps) dev->install_app(a.record, a.scene);
  if (cfg.home_scene) dev->set_home_scene(*cfg.home_scene);
  if (cfg.network) dev->set_network(find_network_profile(*cfg.network));
  if (!cfg.workload.empty()) dev->load_workload(cfg.workload);
  return dev;
}

}  // namespace pb::device
