#include "pb/replay/replayer.hpp"

#include "pb/common/error.hpp"

namespace pb::replay {

void to_json(nlohmann::json& j, const ReplayLogEntry& e) {
  j = {{"index", e.index}, {"t", e.t},   {"command", e.command}, {"backend", e.backend},
       {"delivered", e.delivered}, {"ok", e.ok}};
  if (!e.ok) j["error"] = e.error;
}

void to_json(nlohmann::json& j, const ReplayResult& r) {
  j = {{"ok", r.ok}, {"log", r.log}, {"started_at", r.started_at}, {"finished_at", r.finished_at}};
  j["trace_id"] = r.trace_id ? nlohmann::json(*r.trace_id) : nlohmann::json();
}

ReplayResult replay_script(controller::Controller& ctl, const AutomationScript& script, const ReplayOptions& options) {
  const auto& id = script.device_id;
  if (!ctl.has_device(id)) throw Error(Errc::not_found, "unknown device '" + id + "'");
  const auto screen = ctl.device(id).screen();
  if (script.device_size.width != 0 && !(script.device_size == screen)) {
    throw Error(Errc::validation, "script was compiled for a different screen size");
  }

  ReplayResult r;
  ctl.device_mirroring(id, options.mirroring);
  if (options.measure) r.trace_id = ctl.start_monitor(id, 0);
  r.started_at = ctl.now();

  std::int64_t offset_ms = 0;
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& step = script.steps[i];
    offset_ms += step.delay_ms;
    const double due = r.started_at + static_cast<double>(offset_ms) / 1000.0;
    if (ctl.now() < due) ctl.advance(due - ctl.now());

    ReplayLogEntry entry;
    entry.index = i;
    entry.t = ctl.now();
    entry.command = automation::describe(step.command);
    if (const auto* w = std::get_if<automation::Wait>(&step.command)) {
      // a pure delay: hold until the scheduled end rather than after dispatch overhead
      offset_ms += w->ms;
      const double until = r.started_at + static_cast<double>(offset_ms) / 1000.0;
      if (ctl.now() < until) ctl.advance(until - ctl.now());
      r.log.push_back(entry);
      continue;
    }
    try {
      const auto rep = ctl.execute_command(id, step.command, options.backend, options.needs_mobile_network);
      entry.backend = rep.backend;
      entry.delivered = rep.delivery.delivered;
    } catch (const PartialDeliveryError& e) {
      entry.ok = false;
      entry.delivered = e.delivered();
      entry.error = e.what();
    } catch (const Error& e) {
      entry.ok = false;
      entry.error = e.what();
    }
    r.log.push_back(entry);
    if (!entry.ok) {
      r.ok = false;
      break;
    }
    offset_ms += automation::gesture_duration_ms(step.command);
  }

  if (r.ok) {
    // the script ends when its last gesture would have ended
    const double end = r.started_at + static_cast<double>(offset_ms) / 1000.0;
    if (ctl.now() < end) ctl.advance(end - ctl.now());
  }
  r.finished_at = ctl.now();
  if (options.measure) ctl.stop_monitor();
  return r;
}

}  // namespace pb::replay
