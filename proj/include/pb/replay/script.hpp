#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/automation/command.hpp"
#include "pb/replay/recording.hpp"

namespace pb::replay {

struct ScriptStep {
  int delay_ms = 0;  ///< idle time before the command starts
  automation::InputCommand command;

  bool operator==(const ScriptStep&) const = default;
};

struct AutomationScript {
  DeviceId device_id;
  ScreenSize device_size;
  std::vector<ScriptStep> steps;

  /// Sum of delays and gesture durations.
  std::int64_t duration_ms() const noexcept;
};

struct CompileOptions {
  int tap_max_distance_px = 20;  ///< device pixels
  int tap_max_duration_ms = 250;
  int text_gap_ms = 1000;
};

struct CompileResult {
  AutomationScript script;
  std::vector<std::string> warnings;
};

/// Turns a recording into commands. The script spans the recording: a
/// trailing Wait covers the time between the last command and the last event.
CompileResult compile(const RecordingSession& session, const CompileOptions& options = {});

/// One JSON record per line: {"delay_ms": n, "command": {...}}. A first line
/// {"device_id": .., "device_size": [w, h]} carries the target.
std::string to_jsonl(const AutomationScript& script);
AutomationScript parse_jsonl(const std::string& text);
void save_script(const AutomationScript& script, const std::filesystem::path& path);
AutomationScript load_script(const std::filesystem::path& path);

}  // namespace pb::replay
