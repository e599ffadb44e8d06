#include "pb/server/registry.hpp"

namespace pb::server {

bool valid_node_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 32) return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
  }
  return true;
}

std::string dns_name_for(std::string_view id, std::string_view zone) {
  return std::string(id) + "." + std::string(zone);
}

void to_json(nlohmann::json& j, const VantagePointRecord& r) {
  j = {{"id", r.id},
       {"address", r.address},
       {"dns_name", r.dns_name},
       {"state", r.state},
       {"last_seen", r.last_seen ? nlohmann::json(*r.last_seen) : nlohmann::json(nullptr)},
       {"location", r.location},
       {"labels", r.labels},
       {"devices", r.devices},
       {"devices_stale", r.devices_stale}};
}

void from_json(const nlohmann::json& j, VantagePointRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.address = j.at("address").get<std::string>();
  r.dns_name = j.at("dns_name").get<std::string>();
  r.state = j.at("state").get<NodeState>();
  r.last_seen = j.at("last_seen").is_null() ? std::nullopt : std::optional(j["last_seen"].get<double>());
  r.location = j.value("location", std::string{});
  r.labels = j.value("labels", std::set<std::string>{});
  r.devices = j.value("devices", std::vector<DeviceSummary>{});
  r.devices_stale = j.value("devices_stale", true);
}

}  // namespace pb::server
