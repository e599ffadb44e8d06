#include "pb/replay/recording.hpp"

#include <algorithm>

#include "pb/automation/command.hpp"
#include "pb/common/error.hpp"

namespace pb::replay {

void to_json(nlohmann::json& j, const RecordedEvent& e) {
  j = {{"t", e.t_ms}, {"kind", e.kind}};
  if (e.is_mouse()) {
    j["x"] = e.position.x;
    j["y"] = e.position.y;
    j["view"] = e.view;
  } else {
    j["key"] = e.key;
  }
}

void from_json(const nlohmann::json& j, RecordedEvent& e) {
  e.t_ms = j.at("t").get<std::int64_t>();
  e.kind = j.at("kind").get<EventKind>();
  if (e.is_mouse()) {
    e.position = {j.at("x").get<int>(), j.at("y").get<int>()};
    e.view = j.at("view").get<ScreenSize>();
  } else {
    e.key = j.at("key").get<std::string>();
  }
}

void validate(const RecordedEvent& e) {
  if (e.is_mouse()) {
    if (e.view.width <= 0 || e.view.height <= 0) throw Error(Errc::validation, "view size must be positive");
    const auto& p = e.position;
    if (p.x < 0 || p.y < 0 || p.x > e.view.width || p.y > e.view.height) {
      throw Error(Errc::validation, "position (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                                        ") outside the " + std::to_string(e.view.width) + "x" +
                                        std::to_string(e.view.height) + " view");
    }
    return;
  }
  if (e.key.size() == 1) {
    if (e.key[0] < 0x20 || e.key[0] > 0x7e) throw Error(Errc::validation, "key is not printable");
    return;
  }
  automation::named_key_from_string(e.key);
}

void to_json(nlohmann::json& j, const RecordingSession& s) {
  j = {{"session_id", s.session_id},
       {"device_id", s.device_id},
       {"device_size", s.device_size},
       {"events", s.events},
       {"open", s.open}};
}

void from_json(const nlohmann::json& j, RecordingSession& s) {
  s.session_id = j.value("session_id", "");
  s.device_id = j.at("device_id").get<std::string>();
  s.device_size = j.at("device_size").get<ScreenSize>();
  s.events = j.at("events").get<std::vector<RecordedEvent>>();
  s.open = j.value("open", false);
}

std::string RecordingStore::open(const DeviceId& device, ScreenSize device_size) {
  std::lock_guard lock(mu_);
  for (const auto& [id, s] : sessions_) {
    if (s.open && s.device_id == device) throw Error(Errc::conflict, "device '" + device + "' is already recording");
  }
  RecordingSession s;
  s.session_id = "rec-" + std::to_string(++counter_);
  s.device_id = device;
  s.device_size = device_size;
  const auto id = s.session_id;
  sessions_.emplace(id, std::move(s));
  return id;
}

RecordingSession& RecordingStore::find(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::not_found, "no recording '" + session_id + "'");
  return it->second;
}

std::size_t RecordingStore::ingest(const std::string& session_id, RecordedEvent event) {
  return ingest(session_id, std::vector<RecordedEvent>{std::move(event)});
}

std::size_t RecordingStore::ingest(const std::string& session_id, const std::vector<RecordedEvent>& batch) {
  std::lock_guard lock(mu_);
  auto& s = find(session_id);
  if (!s.open) throw Error(Errc::state, "recording '" + session_id + "' is sealed");
  for (const auto& e : batch) validate(e);
  for (auto e : batch) {
    if (!s.events.empty()) e.t_ms = std::max(e.t_ms, s.events.back().t_ms);
    s.events.push_back(std::move(e));
  }
  return s.events.size();
}

RecordingSession RecordingStore::seal(const std::string& session_id) {
  std::lock_guard lock(mu_);
  auto& s = find(session_id);
  s.open = false;
  return s;
}

RecordingSession RecordingStore::get(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return const_cast<RecordingStore*>(this)->find(session_id);
}

std::optional<std::string> RecordingStore::open_session_for(const DeviceId& device) const {
  std::lock_guard lock(mu_);
  for (const auto& [id, s] : sessions_) {
    if (s.open && s.device_id == device) return id;
  }
  return std::nullopt;
}

namespace {

int scale(int v, int from, int to) {
  // floor(v * to / from + 1/2) in integers
  const auto num = 2 * static_cast<std::int64_t>(v) * to + from;
  const auto q = num / (2 * static_cast<std::int64_t>(from));
  return static_cast<int>(std::clamp<std::int64_t>(q, 0, to - 1));
}

}  // namespace

Point map_coords(Point p, ScreenSize view, ScreenSize device) {
  if (view.width <= 0 || view.height <= 0 || device.width <= 0 || device.height <= 0) {
    throw Error(Errc::validation, "screen sizes must be positive");
  }
  return {scale(p.x, view.width, device.width), scale(p.y, view.height, device.height)};
}

}  // namespace pb::replay
