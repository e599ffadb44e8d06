#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::automation {

enum class NamedKey { enter, tab, backspace, back, home };

std::string_view to_string(NamedKey key) noexcept;
NamedKey named_key_from_string(std::string_view name);

struct Tap {
  int x = 0;
  int y = 0;
  bool operator==(const Tap&) const = default;
};

struct Swipe {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  int duration_ms = 300;
  bool operator==(const Swipe&) const = default;
};

struct Text {
  std::string text;
  bool operator==(const Text&) const = default;
};

struct Key {
  NamedKey key = NamedKey::enter;
  bool operator==(const Key&) const = default;
};

struct LaunchApp {
  AppId app_id;
  bool operator==(const LaunchApp&) const = default;
};

struct Wait {
  int ms = 0;
  bool operator==(const Wait&) const = default;
};

using InputCommand = std::variant<Tap, Swipe, Text, Key, LaunchApp, Wait>;

/// Throws Errc::validation when a command breaks its invariants
/// (negative coordinates, non-positive swipe duration, empty text).
void validate(const InputCommand& cmd);

/// Milliseconds the command occupies on the device timeline.
int gesture_duration_ms(const InputCommand& cmd) noexcept;

std::string describe(const InputCommand& cmd);

void to_json(nlohmann::json& j, const InputCommand& cmd);
void from_json(const nlohmann::json& j, InputCommand& cmd);

}  // namespace pb::automation
