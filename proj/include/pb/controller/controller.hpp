#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pb/automation/backend.hpp"
#include "pb/automation/command.hpp"
#include "pb/automation/dispatch.hpp"
#include "pb/common/types.hpp"
#include "pb/device/sim_device.hpp"
#include "pb/trace/power_trace.hpp"

namespace pb::controller {

inline constexpr double kMinVoltage = 0.8;
inline constexpr double kMaxVoltage = 13.5;
inline constexpr double kUnusedAppSeconds = 7 * 86400.0;
inline constexpr int kDefaultBrightness = 50;

enum class Channel { battery, monitor };
enum class Socket { off, on };
enum class SessionState { running, stopped, faulted };

std::string_view to_string(Channel c) noexcept;
std::string_view to_string(Socket s) noexcept;
std::string_view to_string(SessionState s) noexcept;

struct MonitorConfig {
  std::optional<double> voltage;
  double sample_rate = device::kDefaultSampleRate;
  double current_limit_a = 6.0;
};

struct DeviceLink {
  DeviceId device_id;
  bool usb = true;
  WifiBand wifi_band = WifiBand::off;
  bool wifi_adb = false;
  bool bluetooth_paired = false;
  bool mirroring = false;
};

struct MeasurementSession {
  TraceId trace_id;
  DeviceId device_id;
  JobId job_id;
  MonitorConfig config;
  double started_at = 0.0;
  double duration = 0.0;  ///< 0 = until stop_monitor
  SessionState state = SessionState::running;
};

struct ExecutionReport {
  automation::Backend backend = automation::Backend::usb_adb;
  automation::DeliveryReport delivery;
  std::optional<device::AdbResult> shell;
};

void to_json(nlohmann::json& j, const DeviceLink& l);
void to_json(nlohmann::json& j, const ExecutionReport& r);

/// Vantage-point core: relay bank, meter socket, power monitor, device links
/// and the control jobs built on them. Not internally synchronised; callers
/// serialise access (the HTTP service holds one lock per call).
class Controller {
 public:
  explicit Controller(NodeId node_id, MonitorConfig defaults = {});

  const NodeId& node_id() const noexcept { return node_id_; }

  void add_device(std::unique_ptr<device::SimDevice> dev);
  bool has_device(const DeviceId& id) const { return devices_.count(id) != 0; }
  device::SimDevice& device(const DeviceId& id);
  const device::SimDevice& device(const DeviceId& id) const;
  std::vector<DeviceId> device_ids() const;
  std::vector<DeviceSummary> device_summaries() const;
  const DeviceLink& link(const DeviceId& id) const;
  Channel channel(const DeviceId& id) const;
  Socket socket() const noexcept { return socket_; }
  const MonitorConfig& monitor_config() const noexcept { return config_; }

  // --- core API -----------------------------------------------------------
  Socket power_monitor(bool on);
  MonitorConfig set_voltage(double volts);
  Channel batt_switch(const DeviceId& id);
  TraceId start_monitor(const DeviceId& id, double duration_s, const JobId& job = {});
  /// Seals and returns the session trace; repeated calls return the same
  /// sealed trace. Errc::state if no session was ever started.
  std::shared_ptr<const trace::PowerTrace> stop_monitor();
  DeviceLink device_mirroring(const DeviceId& id, bool on);
  void set_usb(const DeviceId& id, bool on);
  ExecutionReport execute_command(const DeviceId& id, const automation::InputCommand& cmd,
                                  std::optional<automation::Backend> hint = std::nullopt,
                                  bool needs_mobile_network = false);
  /// Raw shell line over an ADB backend.
  ExecutionReport execute_shell(const DeviceId& id, const std::string& line,
                                std::optional<automation::Backend> hint = std::nullopt);

  // --- control jobs -------------------------------------------------------
  nlohmann::json node_setup(const DeviceId& id, bool power, bool visual, bool needs_mobile_network = false,
                            std::optional<automation::Backend> automation = std::nullopt);
  nlohmann::json device_setup(const DeviceId& id, std::optional<int> brightness = std::nullopt,
                              bool mobile_network = false);
  /// Node-wide return to the safe state. A running session defers the
  /// measured device; everything else is restored.
  nlohmann::json cleanup(const std::optional<DeviceId>& id = std::nullopt);

  // --- time ---------------------------------------------------------------
  double now() const noexcept { return static_cast<double>(tick_) / config_.sample_rate; }
  void advance(double seconds);
  void advance_ticks(std::uint64_t ticks);
  void wait_ms(int ms) { advance(ms / 1000.0); }

  // --- sessions and traces ------------------------------------------------
  const std::optional<MeasurementSession>& session() const noexcept { return session_; }
  bool session_running() const noexcept { return session_ && session_->state == SessionState::running; }
  std::shared_ptr<const trace::PowerTrace> find_trace(const TraceId& id) const;
  std::vector<TraceId> trace_ids() const;

  // --- invariants ---------------------------------------------------------
  /// Violated safety properties, empty when all hold.
  std::vector<std::string> invariant_violations() const;
  /// Meter off, every channel on battery, USB charging on everywhere.
  bool safe_state() const;
  nlohmann::json status() const;

  /// Called with the step name before each node/device setup step; throwing
  /// from it simulates a failure of that step.
  void set_fault_hook(std::function<void(std::string_view step)> hook) { fault_hook_ = std::move(hook); }

 private:
  void step(std::string_view name);
  void switch_channel(const DeviceId& id, Channel to);
  bool meter_active_for(const DeviceId& id) const;
  automation::LinkFacts link_facts(const DeviceId& id) const;
  void finish_session(SessionState state, const std::string& reason = {});

  NodeId node_id_;
  MonitorConfig config_;
  Socket socket_ = Socket::off;
  std::map<DeviceId, std::unique_ptr<device::SimDevice>> devices_;
  std::map<DeviceId, Channel> channels_;
  std::map<DeviceId, DeviceLink> links_;
  std::map<DeviceId, automation::HidCursor> cursors_;
  std::optional<MeasurementSession> session_;
  std::shared_ptr<trace::PowerTrace> active_trace_;
  std::map<TraceId, std::shared_ptr<trace::PowerTrace>> traces_;
  std::uint64_t trace_counter_ = 0;
  std::uint64_t tick_ = 0;
  std::function<void(std::string_view)> fault_hook_;
};

}  // namespace pb::controller
