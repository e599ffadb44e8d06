#include "pb/device/profiles.hpp"

#include "pb/common/error.hpp"

namespace pb::device {

namespace {

// Calibrated values come from tools/pb_calibrate.cpp; tests/unit/test_calibration.cpp
// re-derives them and fails when they drift.
std::vector<DeviceProfile> make_profiles() {
  std::vector<DeviceProfile> out;

  DeviceProfile j7;
  j7.name = "J7DUO";
  j7.screen = {720, 1280};
  j7.supports_5ghz = true;
  j7.battery_mah = 3000;
  j7.model = {.base_ma = 110.911255,
              .brightness_coeff_ma = 0.45,
              .cpu_coeff_ma = 400.0,
              .wifi_24_ma = 10.0,
              .wifi_5_ma = 14.0,
              .bluetooth_ma = 4.0};
  j7.video_cpu = 0.031472;
  out.push_back(j7);

  DeviceProfile iphone;
  iphone.name = "IPHONE7";
  iphone.os = Os::ios;
  iphone.screen = {750, 1334};
  iphone.supports_5ghz = true;
  iphone.report_cadence_s.reset();
  iphone.battery_mah = 1960;
  iphone.model = {.base_ma = 85.0,
                  .brightness_coeff_ma = 0.35,
                  .cpu_coeff_ma = 280.0,
                  .wifi_24_ma = 9.0,
                  .wifi_5_ma = 12.0,
                  .bluetooth_ma = 3.0,
                  .supply_voltage = 3.80};
  out.push_back(iphone);

  DeviceProfile smj;
  smj.name = "SMJ337A";
  smj.screen = {720, 1280};
  smj.battery_mah = 2600;
  smj.model = {.base_ma = 162.953429,
               .brightness_coeff_ma = 0.42,
               .cpu_coeff_ma = 246.069720,
               .wifi_24_ma = 10.0,
               .wifi_5_ma = 0.0,
               .bluetooth_ma = 4.0};
  out.push_back(smj);

  DeviceProfile lmx;
  lmx.name = "LMX210";
  lmx.screen = {720, 1280};
  lmx.battery_mah = 2500;
  lmx.model = {.base_ma = 80.883117,
               .brightness_coeff_ma = 0.40,
               .cpu_coeff_ma = 300.0,
               .wifi_24_ma = 10.0,
               .wifi_5_ma = 0.0,
               .bluetooth_ma = 4.0};
  out.push_back(lmx);

  const PowerModel generic{.base_ma = 95.0,
                           .brightness_coeff_ma = 0.40,
                           .cpu_coeff_ma = 350.0,
                           .wifi_24_ma = 10.0,
                           .wifi_5_ma = 13.0,
                           .bluetooth_ma = 4.0};
  const struct {
    const char* name;
    int height;
    double cadence;
    double mah;
  } newer[] = {{"PIXEL3A", 2220, 2.23, 3000}, {"PIXEL4", 2280, 0.66, 2800}, {"PIXEL5", 2340, 0.60, 4080}};
  for (const auto& n : newer) {
    DeviceProfile p;
    p.name = n.name;
    p.screen = {1080, n.height};
    p.supports_5ghz = true;
    p.report_cadence_s = n.cadence;
    p.battery_mah = n.mah;
    p.model = generic;
    out.push_back(p);
  }
  return out;
}

}  // namespace

const std::vector<DeviceProfile>& builtin_profiles() {
  static const std::vector<DeviceProfile> profiles = make_profiles();
  return profiles;
}

const DeviceProfile& find_profile(std::string_view name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(Errc::not_found, "unknown device profile '" + std::string(name) + "'");
}

const std::vector<NetworkProfile>& builtin_network_profiles() {
  static const std::vector<NetworkProfile> profiles = {
      {"south-africa", 6.26, 9.77, 222.04}, {"china-hk", 7.64, 7.77, 286.32}, {"japan", 9.68, 7.76, 239.38},
      {"brazil", 9.75, 8.82, 235.05},       {"ca-usa", 10.63, 14.87, 215.16},
  };
  return profiles;
}

const NetworkProfile& find_network_profile(std::string_view name) {
  for (const auto& p : builtin_network_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(Errc::not_found, "unknown network profile '" + std::string(name) + "'");
}

NetworkProfile local_network() { return {"local", 100.0, 100.0, 5.0}; }

void to_json(nlohmann::json& j, const DeviceProfile& p) {
  j = {{"name", p.name},
       {"os", p.os},
       {"screen", p.screen},
       {"supports_5ghz", p.supports_5ghz},
       {"has_cellular", p.has_cellular},
       {"battery_mah", p.battery_mah},
       {"model", p.model},
       {"idle_cpu", p.idle_cpu},
       {"browser_idle_cpu", p.browser_idle_cpu},
       {"video_cpu", p.video_cpu}};
  j["report_cadence_s"] = p.report_cadence_s ? nlohmann::json(*p.report_cadence_s) : nlohmann::json();
}

void to_json(nlohmann::json& j, const NetworkProfile& p) {
  j = {{"name", p.name}, {"download_mbps", p.download_mbps}, {"upload_mbps", p.upload_mbps}, {"latency_ms", p.latency_ms}};
}

}  // namespace pb::device
