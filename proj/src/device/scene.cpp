#include "pb/device/scene.hpp"

#include "pb/common/error.hpp"

namespace pb::device {

NLOHMANN_JSON_SERIALIZE_ENUM(TargetAction, {{TargetAction::none, "none"},
                                            {TargetAction::launch_app, "launch_app"},
                                            {TargetAction::focus_field, "focus_field"},
                                            {TargetAction::dismiss_onboarding, "dismiss_onboarding"},
                                            {TargetAction::play_video, "play_video"},
                                            {TargetAction::navigate, "navigate"}})

const Target* Scene::hit(Point p) const noexcept {
  for (auto it = targets.rbegin(); it != targets.rend(); ++it) {
    if (it->rect.contains(p)) return &*it;
  }
  return nullptr;
}

const ScrollRegion* Scene::region_at(Point p) const noexcept {
  for (auto it = scrollables.rbegin(); it != scrollables.rend(); ++it) {
    if (it->rect.contains(p)) return &*it;
  }
  return nullptr;
}

const Target* Scene::find(TargetAction action, const std::string& arg) const noexcept {
  for (const auto& t : targets) {
    if (t.action == action && (arg.empty() || t.arg == arg)) return &t;
  }
  return nullptr;
}

const Target* Scene::find_id(const std::string& id) const noexcept {
  for (const auto& t : targets) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

void validate(const Scene& scene, ScreenSize screen) {
  auto check = [&](const Rect& r, const std::string& what) {
    if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > screen.width || r.y + r.h > screen.height) {
      throw Error(Errc::validation, "scene '" + scene.id + "': " + what + " outside screen bounds");
    }
  };
  for (const auto& t : scene.targets) check(t.rect, "target '" + t.id + "'");
  for (const auto& s : scene.scrollables) check(s.rect, "region '" + s.id + "'");
  if (!scene.initial_focus.empty()) {
    const auto* t = scene.find_id(scene.initial_focus);
    if (!t || t->action != TargetAction::focus_field) {
      throw Error(Errc::validation, "scene '" + scene.id + "': initial focus is not a field");
    }
  }
}

Scene home_scene(ScreenSize screen, const std::vector<AppId>& apps) {
  Scene s;
  s.id = "home";
  const int cell = screen.width / 4;
  const int icon = cell * 2 / 3;
  const int top = screen.height / 8;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const int col = static_cast<int>(i % 4);
    const int row = static_cast<int>(i / 4);
    Rect r{col * cell + (cell - icon) / 2, top + row * cell + (cell - icon) / 2, icon, icon};
    if (r.y + r.h > screen.height) break;
    s.targets.push_back({"icon:" + apps[i], r, TargetAction::launch_app, apps[i]});
  }
  return s;
}

Rect url_bar_rect(ScreenSize screen) {
  return {screen.width / 20, screen.height / 40, screen.width * 9 / 10, screen.height / 16};
}

Rect page_rect(ScreenSize screen) {
  const int top = screen.height / 10;
  return {0, top, screen.width, screen.height - top};
}

Scene browser_scene(ScreenSize screen, const std::string& id) {
  Scene s;
  s.id = id;
  s.targets.push_back({"url", url_bar_rect(screen), TargetAction::focus_field, "url"});
  s.targets.push_back({"onboarding",
                       {screen.width / 4, screen.height * 3 / 4, screen.width / 2, screen.height / 12},
                       TargetAction::dismiss_onboarding,
                       {}});
  s.scrollables.push_back({"page", page_rect(screen), page_rect(screen).h * 6});
  return s;
}

Scene video_scene(ScreenSize screen, const std::string& id) {
  Scene s;
  s.id = id;
  s.targets.push_back({"play",
                       {screen.width / 3, screen.height / 3, screen.width / 3, screen.height / 6},
                       TargetAction::play_video,
                       {}});
  return s;
}

Scene generic_scene(ScreenSize screen, const std::string& id) {
  Scene s;
  s.id = id;
  s.targets.push_back({"search", url_bar_rect(screen), TargetAction::focus_field, "search"});
  s.scrollables.push_back({"feed", page_rect(screen), page_rect(screen).h * 4});
  return s;
}

void to_json(nlohmann::json& j, const Rect& r) { j = nlohmann::json::array({r.x, r.y, r.w, r.h}); }

void from_json(const nlohmann::json& j, Rect& r) {
  r = {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

void to_json(nlohmann::json& j, const Scene& s) {
  j = {{"id", s.id}, {"targets", nlohmann::json::array()}, {"scrollables", nlohmann::json::array()}};
  for (const auto& t : s.targets) {
    j["targets"].push_back({{"id", t.id}, {"rect", t.rect}, {"action", t.action}, {"arg", t.arg}});
  }
  for (const auto& r : s.scrollables) {
    j["scrollables"].push_back({{"id", r.id}, {"rect", r.rect}, {"content_height", r.content_height}});
  }
  if (!s.initial_focus.empty()) j["focus"] = s.initial_focus;
}

void from_json(const nlohmann::json& j, Scene& s) {
  s = {};
  s.id = j.at("id").get<std::string>();
  for (const auto& t : j.value("targets", nlohmann::json::array())) {
    s.targets.push_back({t.at("id").get<std::string>(), t.at("rect").get<Rect>(),
                         t.value("action", TargetAction::none), t.value("arg", std::string{})});
  }
  for (const auto& r : j.value("scrollables", nlohmann::json::array())) {
    s.scrollables.push_back({r.at("id").get<std::string>(), r.at("rect").get<Rect>(), r.at("content_height").get<int>()});
  }
  s.initial_focus = j.value("focus", std::string{});
}

}  // namespace pb::device
