#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/automation/backend.hpp"
#include "pb/controller/controller.hpp"
#include "pb/replay/script.hpp"

namespace pb::replay {

struct ReplayOptions {
  bool mirroring = false;
  /// Record a trace around the replay; the node must already be set up for
  /// power measurement on the device.
  bool measure = false;
  std::optional<automation::Backend> backend;
  bool needs_mobile_network = false;
};

struct ReplayLogEntry {
  std::size_t index = 0;
  double t = 0.0;  ///< controller clock when the command started
  std::string command;
  automation::Backend backend = automation::Backend::usb_adb;
  std::size_t delivered = 0;
  bool ok = true;
  std::string error;
};

struct ReplayResult {
  bool ok = true;
  std::vector<ReplayLogEntry> log;
  std::optional<TraceId> trace_id;
  double started_at = 0.0;
  double finished_at = 0.0;
};

void to_json(nlohmann::json& j, const ReplayLogEntry& e);
void to_json(nlohmann::json& j, const ReplayResult& r);

/// Dispatches the script on the controller clock: command i starts at the
/// script offset of i or right after command i-1 finished, whichever is
/// later. Stops at the first failed command.
ReplayResult replay_script(controller::Controller& ctl, const AutomationScript& script, const ReplayOptions& options = {});

}  // namespace pb::replay
