#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::server {

enum class NodeState { online, offline };

NLOHMANN_JSON_SERIALIZE_ENUM(NodeState, {{NodeState::online, "online"}, {NodeState::offline, "offline"}})

inline constexpr std::string_view kDefaultZone = "powerbench.test";

struct VantagePointRecord {
  NodeId id;
  std::string address;  ///< "host:port" of the controller endpoint
  std::string dns_name;
  NodeState state = NodeState::offline;
  std::optional<double> last_seen;
  std::string location;
  std::set<std::string> labels;
  std::vector<DeviceSummary> devices;
  bool devices_stale = true;  ///< no refresh has reached the node yet

  bool operator==(const VantagePointRecord&) const = default;
};

void to_json(nlohmann::json& j, const VantagePointRecord& r);
void from_json(const nlohmann::json& j, VantagePointRecord& r);

/// [a-z0-9-]{1,32}
bool valid_node_id(std::string_view id) noexcept;
std::string dns_name_for(std::string_view id, std::string_view zone);

}  // namespace pb::server
