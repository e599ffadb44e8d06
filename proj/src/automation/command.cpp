#include "pb/automation/command.hpp"

#include "pb/common/error.hpp"

namespace pb::automation {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_non_negative(int v, const char* what) {
  if (v < 0) throw Error(Errc::validation, std::string(what) + " must be >= 0");
}

}  // namespace

std::string_view to_string(NamedKey key) noexcept {
  switch (key) {
    case NamedKey::enter: return "Enter";
    case NamedKey::tab: return "Tab";
    case NamedKey::backspace: return "Backspace";
    case NamedKey::back: return "Back";
    case NamedKey::home: return "Home";
  }
  return "Enter";
}

NamedKey named_key_from_string(std::string_view name) {
  for (auto k : {NamedKey::enter, NamedKey::tab, NamedKey::backspace, NamedKey::back, NamedKey::home}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::validation, "unknown key '" + std::string(name) + "'");
}

void validate(const InputCommand& cmd) {
  std::visit(overloaded{
                 [](const Tap& c) {
                   require_non_negative(c.x, "tap x");
                   require_non_negative(c.y, "tap y");
                 },
                 [](const Swipe& c) {
                   require_non_negative(c.x1, "swipe x1");
                   require_non_negative(c.y1, "swipe y1");
                   require_non_negative(c.x2, "swipe x2");
                   require_non_negative(c.y2, "swipe y2");
                   if (c.duration_ms <= 0) throw Error(Errc::validation, "swipe duration must be > 0");
                 },
                 [](const Text& c) {
                   if (c.text.empty()) throw Error(Errc::validation, "text must be nonempty");
                 },
                 [](const Key&) {},
                 [](const LaunchApp& c) {
                   if (c.app_id.empty()) throw Error(Errc::validation, "app id must be nonempty");
                 },
                 [](const Wait& c) { require_non_negative(c.ms, "wait"); },
             },
             cmd);
}

int gesture_duration_ms(const InputCommand& cmd) noexcept {
  if (const auto* s = std::get_if<Swipe>(&cmd)) return s->duration_ms;
  if (const auto* w = std::get_if<Wait>(&cmd)) return w->ms;
  return 0;
}

std::string describe(const InputCommand& cmd) {
  return std::visit(
      overloaded{
          [](const Tap& c) { return "Tap(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; },
          [](const Swipe& c) {
            return "Swipe(" + std::to_string(c.x1) + "," + std::to_string(c.y1) + "," + std::to_string(c.x2) + "," +
                   std::to_string(c.y2) + "," + std::to_string(c.duration_ms) + ")";
          },
          [](const Text& c) { return "Text(\"" + c.text + "\")"; },
          [](const Key& c) { return "Key(" + std::string(to_string(c.key)) + ")"; },
          [](const LaunchApp& c) { return "LaunchApp(" + c.app_id + ")"; },
          [](const Wait& c) { return "Wait(" + std::to_string(c.ms) + ")"; },
      },
      cmd);
}

void to_json(nlohmann::json& j, const InputCommand& cmd) {
  std::visit(overloaded{
                 [&](const Tap& c) { j = {{"type", "tap"}, {"x", c.x}, {"y", c.y}}; },
                 [&](const Swipe& c) {
                   j = {{"type", "swipe"}, {"x1", c.x1}, {"y1", c.y1}, {"x2", c.x2}, {"y2", c.y2},
                        {"duration_ms", c.duration_ms}};
                 },
                 [&](const Text& c) { j = {{"type", "text"}, {"text", c.text}}; },
                 [&](const Key& c) { j = {{"type", "key"}, {"key", to_string(c.key)}}; },
                 [&](const LaunchApp& c) { j = {{"type", "launch_app"}, {"app_id", c.app_id}}; },
                 [&](const Wait& c) { j = {{"type", "wait"}, {"ms", c.ms}}; },
             },
             cmd);
}

void from_json(const nlohmann::json& j, InputCommand& cmd) {
  const auto type = j.at("type").get<std::string>();
  if (type == "tap") {
    cmd = Tap{j.at("x").get<int>(), j.at("y").get<int>()};
  } else if (type == "swipe") {
    cmd = Swipe{j.at("x1").get<int>(), j.at("y1").get<int>(), j.at("x2").get<int>(), j.at("y2").get<int>(),
                j.value("duration_ms", 300)};
  } else if (type == "text") {
    cmd = Text{j.at("text").get<std::string>()};
  } else if (type == "key") {
    cmd = Key{named_key_from_string(j.at("key").get<std::string>())};
  } else if (type == "launch_app") {
    cmd = LaunchApp{j.at("app_id").get<std::string>()};
  } else if (type == "wait") {
    cmd = Wait{j.at("ms").get<int>()};
  } else {
    throw Error(Errc::validation, "unknown command type '" + type + "'");
  }
}

}  // namespace pb::automation
