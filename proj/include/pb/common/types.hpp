#pragma once

#include <compare>
#include <string>

#include <json.hpp>

namespace pb {

using DeviceId = std::string;
using NodeId = std::string;
using JobId = std::string;
using TraceId = std::string;
using AppId = std::string;

enum class Os { android, ios };

enum class WifiBand { off, ghz_2_4, ghz_5 };

struct ScreenSize {
  int width = 0;
  int height = 0;

  bool operator==(const ScreenSize&) const = default;
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

struct Point {
  int x = 0;
  int y = 0;

  bool operator==(const Point&) const = default;
};

NLOHMANN_JSON_SERIALIZE_ENUM(Os, {{Os::android, "android"}, {Os::ios, "ios"}})
NLOHMANN_JSON_SERIALIZE_ENUM(WifiBand, {{WifiBand::off, "off"},
                                        {WifiBand::ghz_2_4, "2.4GHz"},
                                        {WifiBand::ghz_5, "5GHz"}})

inline void to_json(nlohmann::json& j, const ScreenSize& s) { j = nlohmann::json::array({s.width, s.height}); }
inline void from_json(const nlohmann::json& j, ScreenSize& s) {
  s.width = j.at(0).get<int>();
  s.height = j.at(1).get<int>();
}
inline void to_json(nlohmann::json& j, const Point& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Point& p) {
  p.x = j.at(0).get<int>();
  p.y = j.at(1).get<int>();
}

}  // namespace pb

namespace pb {

/// Per-device entry a controller reports to the access server.
struct DeviceSummary {
  DeviceId device_id;
  Os os = Os::android;
  ScreenSize screen;
  bool adb_available = false;
  std::string address;

  bool operator==(const DeviceSummary&) const = default;
};

inline void to_json(nlohmann::json& j, const DeviceSummary& d) {
  j = {{"device_id", d.device_id}, {"os", d.os}, {"screen", d.screen}, {"adb_available", d.adb_available},
       {"address", d.address}};
}
inline void from_json(const nlohmann::json& j, DeviceSummary& d) {
  d.device_id = j.at("device_id").get<std::string>();
  d.os = j.at("os").get<Os>();
  d.screen = j.at("screen").get<ScreenSize>();
  d.adb_available = j.value("adb_available", false);
  d.address = j.value("address", std::string{});
}

}  // namespace pb
