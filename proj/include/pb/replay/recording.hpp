#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::replay {

enum class EventKind { mouse_down, mouse_up, mouse_move, key_down, key_up };

NLOHMANN_JSON_SERIALIZE_ENUM(EventKind, {{EventKind::mouse_down, "mouse_down"},
                                         {EventKind::mouse_up, "mouse_up"},
                                         {EventKind::mouse_move, "mouse_move"},
                                         {EventKind::key_down, "key_down"},
                                         {EventKind::key_up, "key_up"}})

/// Raw console input. Mouse positions are console-view pixels; view edges
/// are inclusive, so (w, h) is a valid position.
struct RecordedEvent {
  std::int64_t t_ms = 0;
  EventKind kind = EventKind::mouse_down;
  Point position;
  std::string key;  ///< one printable character or a named key ("Enter")
  ScreenSize view;

  bool is_mouse() const noexcept { return kind <= EventKind::mouse_move; }
};

/// {"t": ms, "kind": "mouse_down", "x": .., "y": .., "view": [w, h]} or
/// {"t": ms, "kind": "key_down", "key": "a"}.
void to_json(nlohmann::json& j, const RecordedEvent& e);
void from_json(const nlohmann::json& j, RecordedEvent& e);

/// Throws Errc::validation for a mouse event outside its view or an
/// unknown key name.
void validate(const RecordedEvent& e);

struct RecordingSession {
  std::string session_id;
  DeviceId device_id;
  ScreenSize device_size;
  std::vector<RecordedEvent> events;
  bool open = true;
};

void to_json(nlohmann::json& j, const RecordingSession& s);
void from_json(const nlohmann::json& j, RecordingSession& s);

/// Open and sealed recordings, one open session per device. Thread-safe.
class RecordingStore {
 public:
  /// Errc::conflict if the device already has an open session.
  std::string open(const DeviceId& device, ScreenSize device_size);
  /// Appends in arrival order, clamping a timestamp that goes backwards to
  /// its predecessor. Returns the session's event count. Errc::state once
  /// sealed; a rejected event leaves the session unchanged.
  std::size_t ingest(const std::string& session_id, RecordedEvent event);
  std::size_t ingest(const std::string& session_id, const std::vector<RecordedEvent>& batch);
  RecordingSession seal(const std::string& session_id);
  RecordingSession get(const std::string& session_id) const;
  std::optional<std::string> open_session_for(const DeviceId& device) const;

 private:
  RecordingSession& find(const std::string& session_id);

  mutable std::mutex mu_;
  std::map<std::string, RecordingSession> sessions_;
  std::uint64_t counter_ = 0;
};

/// View point to device point: round-half-up of p * device / view per axis,
/// clamped into the device screen.
Point map_coords(Point p, ScreenSize view, ScreenSize device);

}  // namespace pb::replay
