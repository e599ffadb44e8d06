#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::device {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Rect&) const = default;
  bool contains(Point p) const noexcept { return p.x >= x && p.y >= y && p.x < x + w && p.y < y + h; }
  Point center() const noexcept { return {x + w / 2, y + h / 2}; }
};

enum class TargetAction {
  none,
  launch_app,          ///< arg: app id
  focus_field,         ///< arg: "url" marks an address bar
  dismiss_onboarding,  ///< first-launch screen of a browser
  play_video,
  navigate,  ///< arg: url
};

struct Target {
  std::string id;
  Rect rect;
  TargetAction action = TargetAction::none;
  std::string arg;
};

struct ScrollRegion {
  std::string id;
  Rect rect;
  int content_height = 0;  ///< scrollable extent; offset stays in [0, content_height - rect.h]

  int max_offset() const noexcept { return content_height > rect.h ? content_height - rect.h : 0; }
};

/// Declarative screen: tappable targets, scrollable regions and the field
/// that has focus when the scene first appears.
struct Scene {
  std::string id;
  std::vector<Target> targets;
  std::vector<ScrollRegion> scrollables;
  std::string initial_focus;

  /// Topmost (last declared) target containing p.
  const Target* hit(Point p) const noexcept;
  const ScrollRegion* region_at(Point p) const noexcept;
  const Target* find(TargetAction action, const std::string& arg = {}) const noexcept;
  const Target* find_id(const std::string& id) const noexcept;
};

/// Throws Errc::validation when a rectangle leaves the screen or is empty.
void validate(const Scene& scene, ScreenSize screen);

/// Launcher grid with one icon per app, four columns.
Scene home_scene(ScreenSize screen, const std::vector<AppId>& apps);
/// Address bar, page region and onboarding button.
Scene browser_scene(ScreenSize screen, const std::string& id);
Scene video_scene(ScreenSize screen, const std::string& id);
/// Search field plus a scrollable feed.
Scene generic_scene(ScreenSize screen, const std::string& id);

/// Where a browser's address bar sits on a screen of the given size.
Rect url_bar_rect(ScreenSize screen);
Rect page_rect(ScreenSize screen);

void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);
void to_json(nlohmann::json& j, const Scene& s);
void from_json(const nlohmann::json& j, Scene& s);

}  // namespace pb::device
