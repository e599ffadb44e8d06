#include "pb/controller/controller.hpp"

#include <algorithm>
#include <cmath>

#include "pb/common/error.hpp"
#include "pb/trace/kernels.hpp"

namespace pb::controller {

std::string_view to_string(Channel c) noexcept { return c == Channel::monitor ? "Monitor" : "Battery"; }
std::string_view to_string(Socket s) noexcept { return s == Socket::on ? "On" : "Off"; }
std::string_view to_string(SessionState s) noexcept {
  switch (s) {
    case SessionState::running: return "running";
    case SessionState::stopped: return "stopped";
    case SessionState::faulted: return "faulted";
  }
  return "running";
}

void to_json(nlohmann::json& j, const DeviceLink& l) {
  j = {{"device_id", l.device_id}, {"usb", l.usb ? "on" : "off"}, {"wifi_band", l.wifi_band},
       {"wifi_adb", l.wifi_adb},   {"bluetooth_paired", l.bluetooth_paired},
       {"mirroring", l.mirroring ? "on" : "off"}};
}

void to_json(nlohmann::json& j, const ExecutionReport& r) {
  j = {{"backend", r.backend}, {"delivery", r.delivery}};
  if (r.shell) j["shell"] = {{"exit_code", r.shell->exit_code}, {"output", r.shell->output}};
}

Controller::Controller(NodeId node_id, MonitorConfig defaults) : node_id_(std::move(node_id)), config_(defaults) {
  if (config_.sample_rate <= 0) throw Error(Errc::validation, "sample rate must be > 0");
  config_.voltage.reset();
}

void Controller::add_device(std::unique_ptr<device::SimDevice> dev) {
  if (!dev) throw Error(Errc::validation, "null device");
  if (dev->sample_rate() != config_.sample_rate) {
    throw Error(Errc::validation, "device sample rate differs from the monitor's");
  }
  const auto id = dev->id();
  if (devices_.count(id)) throw Error(Errc::conflict, "device '" + id + "' already attached");
  if (dev->tick() < tick_) dev->advance(tick_ - dev->tick());
  DeviceLink link;
  link.device_id = id;
  link.wifi_band = dev->state().wifi;
  link.bluetooth_paired = dev->os() == Os::ios;
  if (link.bluetooth_paired) dev->set_bluetooth(true);
  links_[id] = link;
  channels_[id] = Channel::battery;
  cursors_[id] = {};
  devices_[id] = std::move(dev);
}

device::SimDevice& Controller::device(const DeviceId& id) {
  auto it = devices_.find(id);
  if (it == devices_.end()) throw Error(Errc::not_found, "unknown device '" + id + "'");
  return *it->second;
}

const device::SimDevice& Controller::device(const DeviceId& id) const {
  auto it = devices_.find(id);
  if (it == devices_.end()) throw Error(Errc::not_found, "unknown device '" + id + "'");
  return *it->second;
}

std::vector<DeviceId> Controller::device_ids() const {
  std::vector<DeviceId> ids;
  for (const auto& [id, _] : devices_) ids.push_back(id);
  return ids;
}

std::vector<DeviceSummary> Controller::device_summaries() const {
  std::vector<DeviceSummary> out;
  for (const auto& [id, dev] : devices_) {
    out.push_back({id, dev->os(), dev->screen(), dev->os() == Os::android, node_id_ + "/" + id});
  }
  return out;
}

const DeviceLink& Controller::link(const DeviceId& id) const {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(Errc::not_found, "unknown device '" + id + "'");
  return it->second;
}

Channel Controller::channel(const DeviceId& id) const {
  auto it = channels_.find(id);
  if (it == channels_.end()) throw Error(Errc::not_found, "unknown device '" + id + "'");
  return it->second;
}

// --- core API -------------------------------------------------------------------

Socket Controller::power_monitor(bool on) {
  if (on) {
    if (socket_ == Socket::off) {
      socket_ = Socket::on;
      config_.voltage.reset();
    }
    return socket_;
  }
  if (session_running()) throw Error(Errc::safety, "meter cannot be switched off during a measurement");
  for (const auto& [id, ch] : channels_) {
    if (ch == Channel::monitor) throw Error(Errc::safety, "device '" + id + "' is still powered by the meter");
  }
  socket_ = Socket::off;
  config_.voltage.reset();
  return socket_;
}

MonitorConfig Controller::set_voltage(double volts) {
  if (socket_ != Socket::on) throw Error(Errc::state, "meter is off");
  if (!(volts >= kMinVoltage && volts <= kMaxVoltage)) {
    throw Error(Errc::range, "voltage must be within [0.8, 13.5] V");
  }
  if (session_running()) throw Error(Errc::state, "voltage is fixed while a measurement runs");
  config_.voltage = volts;
  for (const auto& [id, ch] : channels_) {
    if (ch == Channel::monitor) devices_.at(id)->set_power_source(device::PowerSource::monitor, volts);
  }
  return config_;
}

void Controller::switch_channel(const DeviceId& id, Channel to) {
  // Make-before-break: the device moves to the new source in one step.
  auto& dev = *devices_.at(id);
  if (to == Channel::monitor) {
    dev.set_power_source(device::PowerSource::monitor, *config_.voltage);
  } else {
    dev.set_power_source(device::PowerSource::battery, 0.0);
  }
  channels_[id] = to;
}

Channel Controller::batt_switch(const DeviceId& id) {
  const Channel current = channel(id);
  if (current == Channel::monitor) {
    if (session_running() && session_->device_id == id) {
      throw Error(Errc::safety, "device '" + id + "' is being measured");
    }
    switch_channel(id, Channel::battery);
    return Channel::battery;
  }
  if (socket_ != Socket::on) throw Error(Errc::state, "meter is off");
  if (!config_.voltage) throw Error(Errc::state, "voltage not set");
  for (const auto& [other, ch] : channels_) {
    if (ch == Channel::monitor) {
      throw Error(Errc::exclusivity, "meter already powers device '" + other + "'");
    }
  }
  switch_channel(id, Channel::monitor);
  return Channel::monitor;
}

TraceId Controller::start_monitor(const DeviceId& id, double duration_s, const JobId& job) {
  if (channel(id) != Channel::monitor) throw Error(Errc::precondition, "device '" + id + "' is not on the monitor");
  if (session_running()) throw Error(Errc::exclusivity, "a measurement is already running");
  if (links_.at(id).usb) throw Error(Errc::precondition, "usb must be off during measurements");
  if (!(duration_s >= 0) || !std::isfinite(duration_s)) throw Error(Errc::validation, "duration must be >= 0");
  MeasurementSession s;
  s.trace_id = "trace-" + node_id_ + "-" + std::to_string(++trace_counter_);
  s.device_id = id;
  s.job_id = job;
  s.config = config_;
  s.started_at = now();
  s.duration = duration_s;
  active_trace_ = std::make_shared<trace::PowerTrace>(s.trace_id, *config_.voltage, config_.sample_rate,
                                                      trace::TraceMetadata{id, job, s.started_at});
  traces_[s.trace_id] = active_trace_;
  session_ = s;
  return s.trace_id;
}

void Controller::finish_session(SessionState state, const std::string& reason) {
  if (state == SessionState::faulted) {
    active_trace_->seal_faulted(reason);
  } else {
    active_trace_->seal();
  }
  session_->state = state;
}

std::shared_ptr<const trace::PowerTrace> Controller::stop_monitor() {
  if (!session_) throw Error(Errc::state, "no measurement session");
  if (session_->state == SessionState::running) finish_session(SessionState::stopped);
  return active_trace_;
}

DeviceLink Controller::device_mirroring(const DeviceId& id, bool on) {
  auto& dev = device(id);
  dev.set_mirroring(on);
  links_.at(id).mirroring = on;
  return links_.at(id);
}

void Controller::set_usb(const DeviceId& id, bool on) {
  device(id);
  if (on && session_running() && session_->device_id == id) {
    throw Error(Errc::precondition, "usb must stay off while '" + id + "' is measured");
  }
  links_.at(id).usb = on;
}

bool Controller::meter_active_for(const DeviceId& id) const {
  return socket_ == Socket::on && channels_.at(id) == Channel::monitor;
}

automation::LinkFacts Controller::link_facts(const DeviceId& id) const {
  const auto& l = links_.at(id);
  const auto& dev = *devices_.at(id);
  return {dev.os(), l.usb, dev.state().wifi, l.wifi_adb, l.bluetooth_paired};
}

ExecutionReport Controller::execute_command(const DeviceId& id, const automation::InputCommand& cmd,
                                            std::optional<automation::Backend> hint, bool needs_mobile_network) {
  auto& dev = device(id);
  ExecutionReport r;
  r.backend = automation::select_backend(link_facts(id), meter_active_for(id), needs_mobile_network, hint);
  automation::DispatchContext ctx;
  ctx.wait = [this](int ms) { wait_ms(ms); };
  r.delivery = automation::dispatch(cmd, dev, r.backend, cursors_.at(id), ctx);
  return r;
}

ExecutionReport Controller::execute_shell(const DeviceId& id, const std::string& line,
                                          std::optional<automation::Backend> hint) {
  auto& dev = device(id);
  ExecutionReport r;
  r.backend = automation::select_backend(link_facts(id), meter_active_for(id), false, hint);
  if (r.backend == automation::Backend::bluetooth_hid) {
    throw Error(Errc::routing, "shell commands need an adb backend");
  }
  r.shell = dev.adb_shell(line);
  r.delivery.backend = r.backend;
  r.delivery.wire.push_back(line);
  r.delivery.delivered = 1;
  const int latency = r.backend == automation::Backend::usb_adb ? automation::kUsbAdbLatencyMs
                                                                : automation::kWifiAdbLatencyMs;
  r.delivery.elapsed_ms = latency;
  wait_ms(latency);
  return r;
}

// --- control jobs ---------------------------------------------------------------

void Controller::step(std::string_view name) {
  if (fault_hook_) fault_hook_(name);
}

nlohmann::json Controller::node_setup(const DeviceId& id, bool power, bool visual, bool needs_mobile_network,
                                      std::optional<automation::Backend> automation) {
  auto& dev = device(id);
  if (session_running()) throw Error(Errc::state, "a measurement is running on this node");
  nlohmann::json steps = nlohmann::json::array();
  std::string current;
  auto run = [&](const char* name, auto&& fn) {
    current = name;
    step(name);
    fn();
    steps.push_back(name);
  };
  try {
    if (power) {
      run("meter_on", [&] { power_monitor(true); });
      run("set_voltage", [&] { set_voltage(dev.profile().model.supply_voltage); });
      run("batt_switch", [&] {
        if (channel(id) == Channel::monitor) return;
        for (const auto& other : device_ids()) {
          if (other != id && channel(other) == Channel::monitor) batt_switch(other);
        }
        batt_switch(id);
      });
    }
    run("wifi", [&] {
      const auto band = dev.profile().preferred_band();
      dev.set_wifi(band);
      links_.at(id).wifi_band = band;
    });
    run("automation", [&] {
      const bool hid = dev.os() == Os::ios || needs_mobile_network ||
                       (automation && *automation == automation::Backend::bluetooth_hid);
      if (hid) {
        dev.set_bluetooth(true);
        links_.at(id).bluetooth_paired = true;
      } else {
        links_.at(id).wifi_adb = true;
      }
    });
    run("usb_off", [&] { set_usb(id, false); });
    if (visual) run("mirroring", [&] { device_mirroring(id, true); });
  } catch (const std::exception& e) {
    try {
      cleanup(id);
    } catch (...) {
      // the original failure is what the caller needs to see
    }
    throw StepError(current, "node_setup step '" + current + "' failed: " + e.what());
  }
  return {{"device_id", id}, {"power", power}, {"visual", visual}, {"steps", steps}, {"status", status()}};
}

nlohmann::json Controller::device_setup(const DeviceId& id, std::optional<int> brightness, bool mobile_network) {
  auto& dev = device(id);
  const int level = brightness.value_or(kDefaultBrightness);
  if (level < 0 || level > device::kMaxBrightness) throw Error(Errc::range, "brightness must be within [0, 250]");
  nlohmann::json steps = nlohmann::json::array();
  std::string current;
  auto run = [&](const char* name, auto&& fn) {
    current = name;
    step(name);
    fn();
    steps.push_back(name);
  };
  try {
    run("notifications_off", [&] { dev.set_notifications(false); });
    run("connectivity", [&] {
      const bool mobile = mobile_network && dev.profile().has_cellular;
      if (mobile) {
        dev.set_airplane(false);
        dev.set_mobile_data(true);
      } else {
        dev.set_airplane(true);
      }
      auto band = links_.at(id).wifi_band;
      if (band == WifiBand::off) band = dev.profile().preferred_band();
      dev.set_wifi(band);
      links_.at(id).wifi_band = band;
      dev.set_bluetooth(links_.at(id).bluetooth_paired);
    });
    run("close_apps", [&] {
      dev.go_home();
      dev.close_background_apps();
    });
    run("brightness", [&] {
      dev.set_auto_brightness(false);
      dev.set_brightness(level);
    });
  } catch (const std::exception& e) {
    throw StepError(current, "device_setup step '" + current + "' failed: " + e.what());
  }
  return {{"device_id", id}, {"steps", steps}, {"state", dev.observable_state()}};
}

nlohmann::json Controller::cleanup(const std::optional<DeviceId>& id) {
  if (id) device(*id);
  std::optional<DeviceId> deferred;
  if (session_running()) deferred = session_->device_id;
  for (const auto& [dev_id, ch] : channels_) {
    if (ch == Channel::monitor && dev_id != deferred) switch_channel(dev_id, Channel::battery);
  }
  if (!deferred) {
    socket_ = Socket::off;
    config_.voltage.reset();
  }
  nlohmann::json removed = nlohmann::json::object();
  for (auto& [dev_id, dev] : devices_) {
    if (dev_id == deferred) continue;
    links_.at(dev_id).usb = true;
    if (links_.at(dev_id).mirroring) device_mirroring(dev_id, false);
    const auto gone = dev->uninstall_unused(kUnusedAppSeconds);
    if (!gone.empty()) removed[dev_id] = gone;
  }
  return {{"deferred", deferred ? nlohmann::json(*deferred) : nlohmann::json()},
          {"removed_apps", removed},
          {"safe", safe_state()}};
}

// --- time ---------------------------------------------------------------------------

void Controller::advance(double seconds) {
  if (seconds <= 0) return;
  advance_ticks(static_cast<std::uint64_t>(std::llround(seconds * config_.sample_rate)));
}

void Controller::advance_ticks(std::uint64_t ticks) {
  std::uint64_t remaining = ticks;
  while (remaining > 0) {
    std::uint64_t n = remaining;
    const bool measuring = session_running();
    if (measuring && session_->duration > 0) {
      const auto total = static_cast<std::uint64_t>(std::llround(session_->duration * config_.sample_rate));
      n = std::min<std::uint64_t>(n, total - std::min<std::uint64_t>(total, active_trace_->size()));
      if (n == 0) {
        finish_session(SessionState::stopped);
        continue;
      }
    }
    for (auto& [id, dev] : devices_) {
      if (measuring && id == session_->device_id && n > 0) {
        const auto first = active_trace_->size();
        auto sink = active_trace_->append_uninitialized(n);
        dev->advance(n, sink);
        const double limit_ma = session_->config.current_limit_a * 1000.0;
        if (auto over = trace::kernels::first_above(sink, limit_ma)) {
          active_trace_->truncate(first + *over + 1);
          finish_session(SessionState::faulted, "overcurrent: sample " + std::to_string(first + *over) +
                                                    " exceeded " + std::to_string(session_->config.current_limit_a) +
                                                    " A");
        }
      } else {
        dev->advance(n);
      }
    }
    tick_ += n;
    remaining -= n;
    if (session_running() && session_->duration > 0) {
      const auto total = static_cast<std::uint64_t>(std::llround(session_->duration * config_.sample_rate));
      if (active_trace_->size() >= total) finish_session(SessionState::stopped);
    }
  }
}

// --- sessions and invariants ------------------------------------------------------

std::shared_ptr<const trace::PowerTrace> Controller::find_trace(const TraceId& id) const {
  auto it = traces_.find(id);
  if (it == traces_.end()) throw Error(Errc::not_found, "unknown trace '" + id + "'");
  return it->second;
}

std::vector<TraceId> Controller::trace_ids() const {
  std::vector<TraceId> ids;
  for (const auto& [id, _] : traces_) ids.push_back(id);
  return ids;
}

std::vector<std::string> Controller::invariant_violations() const {
  std::vector<std::string> v;
  int monitors = 0;
  for (const auto& [id, ch] : channels_) {
    if (ch != Channel::monitor) continue;
    ++monitors;
    if (socket_ == Socket::off) v.push_back("meter off while '" + id + "' is on the monitor");
    if (!config_.voltage) v.push_back("'" + id + "' on the monitor without a voltage");
  }
  if (monitors > 1) v.push_back("more than one channel on the monitor");
  if (session_running()) {
    if (links_.at(session_->device_id).usb) v.push_back("usb on during measurement");
    if (channels_.at(session_->device_id) != Channel::monitor) v.push_back("measured device not on the monitor");
  }
  return v;
}

bool Controller::safe_state() const {
  if (socket_ != Socket::off) return false;
  for (const auto& [id, ch] : channels_) {
    if (ch != Channel::battery || !links_.at(id).usb) return false;
  }
  return true;
}

nlohmann::json Controller::status() const {
  // a rail below the device's shutdown voltage; counted, not prevented
  nlohmann::json brownouts = nlohmann::json::object();
  for (const auto& [id, dev] : devices_) {
    if (dev->brownouts() != 0) brownouts[id] = dev->brownouts();
  }
  nlohmann::json channels = nlohmann::json::object();
  nlohmann::json links = nlohmann::json::object();
  for (const auto& [id, ch] : channels_) channels[id] = to_string(ch);
  for (const auto& [id, l] : links_) links[id] = l;
  nlohmann::json meter = {{"socket", to_string(socket_)},
                          {"sample_rate", config_.sample_rate},
                          {"current_limit_a", config_.current_limit_a}};
  meter["voltage"] = config_.voltage ? nlohmann::json(*config_.voltage) : nlohmann::json();
  nlohmann::json session;
  if (session_) {
    session = {{"trace_id", session_->trace_id},   {"device_id", session_->device_id},
               {"job_id", session_->job_id},       {"started_at", session_->started_at},
               {"duration", session_->duration},   {"state", to_string(session_->state)},
               {"voltage", *session_->config.voltage}};
  }
  return {{"node_id", node_id_},
          {"time", now()},
          {"meter", meter},
          {"channels", channels},
          {"links", links},
          {"session", session},
          {"devices", device_summaries()},
          {"brownouts", brownouts},
          {"safe", safe_state()}};
}

}  // namespace pb::controller
