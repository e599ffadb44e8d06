#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pb/controller/controller.hpp"
#include "pb/device/profiles.hpp"
#include "pb/replay/script.hpp"
#include "pb/trace/power_trace.hpp"

namespace pb::scenarios {

/// Ten popular news front pages, visited in order.
const std::vector<std::string>& news_sites();

struct NewsSessionOptions {
  ScreenSize view{360, 640};  ///< console view of the device screen
  double per_site_s = 38.0;
  std::uint64_t seed = 7;     ///< human timing jitter
};

/// A tester's console input for the news workload in a browser that is
/// already in the foreground: per site, tap the address bar, type the URL,
/// press Enter, wait out the page load, scroll down and back up. The first
/// and last events bound the session (10 sites x 38 s = 380 s by default).
replay::RecordingSession news_session(const DeviceId& device, ScreenSize device_size,
                                      const NewsSessionOptions& options = {});

struct MeasuredRun {
  std::shared_ptr<const trace::PowerTrace> trace;
  double energy_j = 0.0;
  double duration_s = 0.0;
};

/// Forwards a recording to the device as a live remote-desktop session
/// would, with mirroring on, while measuring. The node must be set up for
/// power on the device.
MeasuredRun run_live_session(controller::Controller& ctl, const replay::RecordingSession& session);

struct UsabilityOptions {
  std::string profile = "SMJ337A";
  std::optional<device::DeviceProfile> profile_override;
  std::uint64_t device_seed = 11;
  std::optional<double> noise_ma;
  NewsSessionOptions session;
};

struct UsabilityStudy {
  MeasuredRun recorded;  ///< tester driving the device, mirroring on
  MeasuredRun replayed;  ///< compiled script, mirroring off
  replay::AutomationScript script;
  std::vector<std::string> warnings;
  bool replay_ok = false;
  nlohmann::json recorded_state;  ///< observable device state at the end
  nlohmann::json replayed_state;

  /// Relative energy saved by replaying.
  double gap() const noexcept { return 1.0 - replayed.energy_j / recorded.energy_j; }
};

/// Records the news workload live, compiles it and replays it on a second,
/// identically seeded node.
UsabilityStudy run_usability_study(const UsabilityOptions& options = {});

/// Node with one freshly built device after node_setup(power) and
/// device_setup().
std::unique_ptr<controller::Controller> prepared_node(const device::DeviceProfile& profile, std::uint64_t seed,
                                                      std::optional<double> noise_ma = std::nullopt,
                                                      bool visual = false);

/// Device at rest on the home screen after setup, measured for `seconds`.
MeasuredRun idle_run(const device::DeviceProfile& profile, double seconds, std::uint64_t seed = 1,
                     std::optional<double> noise_ma = std::nullopt);

struct VideoMedians {
  double off_ma = 0.0;
  double on_ma = 0.0;
};

/// Median current of video playback with mirroring off, then on.
VideoMedians video_medians(const device::DeviceProfile& profile, double seconds_each, std::uint64_t seed = 1);

struct SweepRun {
  std::shared_ptr<const trace::PowerTrace> trace;
  std::vector<device::BatteryReading> readings;  ///< every software reading, in order
};

/// Brightness stepped 0..250 in steps of 50, `step_s` seconds each, on an
/// otherwise idle device; software readings collected as they appear.
SweepRun brightness_sweep(const device::DeviceProfile& profile, double step_s = 60.0, std::uint64_t seed = 1);

}  // namespace pb::scenarios
