#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pb/automation/command.hpp"
#include "pb/automation/hid.hpp"
#include "pb/common/types.hpp"
#include "pb/device/page_load.hpp"
#include "pb/device/profiles.hpp"
#include "pb/device/scene.hpp"
#include "pb/trace/kernels.hpp"
#include "pb/trace/power_trace.hpp"

namespace pb::device {

inline constexpr std::string_view kHome = "home";
inline constexpr int kMaxBrightness = 250;
inline constexpr int kTapSlopPx = 10;
inline constexpr double kDefaultSampleRate = 5000.0;
inline constexpr double kDefaultStreamBitrate = 1e6;

enum class AppKind { generic, browser, video };
enum class PowerSource { battery, monitor };

struct AppRecord {
  AppId id;
  AppKind kind = AppKind::generic;
  bool system = false;
  double installed_at = 0.0;  ///< device clock, seconds
  double last_used = 0.0;
  bool onboarding_pending = false;
};

struct DeviceState {
  int brightness = 128;
  bool auto_brightness = true;
  bool airplane = false;
  WifiBand wifi = WifiBand::ghz_2_4;
  bool bluetooth = false;
  bool mobile_data = true;
  bool notifications = true;
  bool mirroring = false;
  PowerSource power_source = PowerSource::battery;
  double rail_voltage = 0.0;

  std::string foreground{kHome};
  std::set<AppId> background;
  std::map<AppId, AppRecord> apps;

  std::map<std::string, std::string> fields;  ///< "scene/field" -> text
  std::map<std::string, int> scroll;          ///< "scene/region" -> offset
  std::map<std::string, std::string> focus;   ///< scene -> focused field id
  std::string url;                            ///< page shown by the browser
  std::uint64_t page_loads = 0;
  bool video_playing = false;
};

struct BatteryReading {
  double t = 0.0;             ///< end of the window
  double window_start = 0.0;
  double current_ma = 0.0;
  double voltage = 0.0;
};

struct Frame {
  std::uint64_t seq = 0;
  double t = 0.0;
  ScreenSize size;
  std::array<std::uint8_t, 64> cells{};  ///< 8x8 luma summary, row major
  std::uint64_t content_hash = 0;
  std::size_t encoded_bytes = 0;
};

struct StateDelta {
  std::vector<std::string> changes;
  bool empty() const noexcept { return changes.empty(); }
};

struct AdbResult {
  int exit_code = 0;
  std::string output;
};

namespace workload {
struct SetBrightness {
  int level = 0;
};
struct Launch {
  AppId app;
};
struct PlayVideo {
  bool on = true;
};
/// Pins CPU load to a value; an empty load returns control to the app model.
struct SetCpu {
  std::optional<double> load;
};
struct Navigate {
  std::string url;
};
struct Input {
  automation::InputCommand command;
};
}  // namespace workload

using WorkloadAction = std::variant<workload::SetBrightness, workload::Launch, workload::PlayVideo,
                                    workload::SetCpu, workload::Navigate, workload::Input>;

struct WorkloadEvent {
  double t = 0.0;  ///< seconds after the script is loaded
  WorkloadAction action;
};

void to_json(nlohmann::json& j, const WorkloadEvent& e);
void from_json(const nlohmann::json& j, WorkloadEvent& e);

/// Simulated phone. Time advances only through advance()/step(); every
/// tick yields one current sample at the device sample rate.
class SimDevice {
 public:
  SimDevice(DeviceId id, DeviceProfile profile, std::uint64_t seed = 1, double sample_rate = kDefaultSampleRate);

  const DeviceId& id() const noexcept { return id_; }
  const DeviceProfile& profile() const noexcept { return profile_; }
  Os os() const noexcept { return profile_.os; }
  ScreenSize screen() const noexcept { return profile_.screen; }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_noise(double sigma_ma) { profile_.model.noise_ma = sigma_ma; }

  // --- clock and power ---------------------------------------------------
  double sample_rate() const noexcept { return rate_; }
  std::uint64_t tick() const noexcept { return tick_; }
  double now() const noexcept { return static_cast<double>(tick_) / rate_; }
  std::uint64_t ticks_for(double seconds) const noexcept;

  /// Generates `ticks` samples. When `sink` is non-empty it must hold exactly
  /// `ticks` slots and receives the samples.
  void advance(std::uint64_t ticks, std::span<double> sink = {});
  void advance_seconds(double seconds) { advance(ticks_for(seconds)); }
  /// Advances by dt (at least one tick) and returns the mean sample.
  trace::PowerSample step(double dt);

  PowerInputs power_inputs() const;
  double cpu_load() const;
  double effective_cpu() const { return profile_.model.effective_cpu(cpu_load(), state_.mirroring); }
  double mean_current_ma() const { return profile_.model.mean_current_ma(power_inputs()); }
  double voltage() const noexcept;
  double integrated_energy_j() const noexcept { return energy_.value(); }
  double rx_bytes() const noexcept { return rx_bytes_; }
  bool page_loading() const noexcept;
  std::uint64_t brownouts() const noexcept { return brownouts_; }

  /// Empty before the first cadence window closes and on devices without
  /// software readings.
  std::optional<BatteryReading> software_battery_reading() const { return last_reading_; }

  // --- input -------------------------------------------------------------
  StateDelta apply_input(const automation::InputCommand& cmd);
  AdbResult adb_shell(std::string_view line);
  StateDelta hid_mouse(const automation::HidMouseReport& report);
  StateDelta hid_keyboard(const automation::HidKeyboardReport& report);
  /// Absolute pointer event as delivered by a remote-desktop session.
  StateDelta pointer_event(Point p, bool pressed);
  /// One key press from a remote-desktop session: a single printable
  /// character or a named key ("Enter", "Back", ...).
  StateDelta key_event(const std::string& key);
  Point pointer() const noexcept { return pointer_; }

  // --- settings and app management (driver-level access) -----------------
  void set_brightness(int level);
  void set_auto_brightness(bool on);
  void set_airplane(bool on);
  void set_wifi(WifiBand band);
  void set_bluetooth(bool on);
  void set_mobile_data(bool on);
  void set_notifications(bool on);
  void set_mirroring(bool on);
  void set_power_source(PowerSource source, double rail_voltage);
  void go_home();
  void close_background_apps();
  void install_app(AppRecord app, std::optional<Scene> scene = std::nullopt);
  void uninstall_app(const AppId& app);
  bool installed(const AppId& app) const { return state_.apps.count(app) != 0; }
  /// Wipes cache and settings; the next launch shows onboarding again.
  void clear_app_data(const AppId& app);
  void force_stop(const AppId& app);
  /// Removes non-system apps whose last use is at least max_idle_s ago.
  std::vector<AppId> uninstall_unused(double max_idle_s);
  void set_home_scene(Scene scene);

  // --- workloads ---------------------------------------------------------
  /// Events are timed relative to the current clock.
  void load_workload(std::vector<WorkloadEvent> events);
  void set_cpu_override(std::optional<double> load) { cpu_override_ = load; }
  void set_page_resolver(PageResolver resolver) { resolver_ = std::move(resolver); }
  void set_network(NetworkProfile net) { network_ = std::move(net); }
  const NetworkProfile& network() const noexcept { return network_; }

  // --- mirroring ---------------------------------------------------------
  /// Throws Errc::unavailable while mirroring is off.
  Frame render_frame();
  void set_stream_bitrate(double bits_per_second) { bitrate_ = bits_per_second; }
  std::uint64_t stream_bytes() const noexcept { return stream_bytes_; }

  const DeviceState& state() const noexcept { return state_; }
  const Scene& active_scene() const;
  /// State an automation backend can influence; excludes clocks and
  /// transient load so that backends can be compared.
  nlohmann::json observable_state() const;

 private:
  struct ActiveLoad {
    PageLoadProfile profile;
    std::uint64_t start_tick = 0;  ///< first response byte
  };

  // gesture pipeline shared by every input path
  StateDelta touch(Point down, Point up);
  StateDelta tap(Point p);
  StateDelta swipe(Point down, Point up);
  StateDelta type_char(char c);
  StateDelta press_key(automation::NamedKey key);
  StateDelta launch(const AppId& app);
  void navigate(const std::string& url);
  void bump();
  void check_bounds(Point p) const;
  std::string field_key(const std::string& field) const;

  double workload_cpu() const;
  std::optional<std::size_t> load_segment() const;
  std::uint64_t next_boundary() const;
  void apply_due_events();
  void apply_event(const WorkloadAction& action);
  void close_window_if_due();
  void rebuild_home();

  DeviceId id_;
  DeviceProfile profile_;
  std::uint64_t seed_;
  double rate_;
  std::uint64_t tick_ = 0;

  DeviceState state_;
  Scene home_;
  bool custom_home_ = false;
  std::map<AppId, Scene> scenes_;

  std::optional<double> cpu_override_;
  std::uint64_t bump_until_ = 0;
  std::deque<std::pair<std::uint64_t, WorkloadAction>> events_;
  PageResolver resolver_;
  NetworkProfile network_;
  std::optional<ActiveLoad> load_;

  trace::CompensatedSum energy_;
  double rx_bytes_ = 0.0;
  std::uint64_t brownouts_ = 0;

  std::uint64_t cadence_ticks_ = 0;
  std::uint64_t window_start_ = 0;
  trace::CompensatedSum window_sum_;
  std::optional<BatteryReading> last_reading_;

  Point pointer_{};
  std::uint8_t buttons_ = 0;
  Point press_point_{};
  automation::HidKeyboardReport last_keys_{};

  std::uint64_t frame_seq_ = 0;
  double bitrate_ = kDefaultStreamBitrate;
  double tokens_ = 0.0;
  std::uint64_t token_tick_ = 0;
  std::uint64_t stream_bytes_ = 0;
  std::uint64_t last_hash_ = 0;

  std::vector<double> scratch_;
};

}  // namespace pb::device
