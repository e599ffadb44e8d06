#pragma once

#include "pb/device/profiles.hpp"

// Closed-form pieces of preset calibration. The replay-anchored pieces need
// a full workload simulation and live in pb/scenarios/calibrate.hpp.
namespace pb::device::calibration {

inline constexpr double kIdleSeconds = 600.0;
inline constexpr double kJ7duoIdleJoules = 359.0;
inline constexpr double kLmx210IdleJoules = 270.0;
inline constexpr double kVideoMedianMa = 160.0;
inline constexpr double kVideoMirroredMedianMa = 220.0;
inline constexpr double kNewsSeconds = 380.0;
inline constexpr double kNewsRecordedJoules = 399.0;
inline constexpr double kNewsReplayJoules = 345.0;
inline constexpr int kSetupBrightness = 50;

/// Inputs of a device at rest after device setup: home screen, setup
/// brightness, WiFi on the preferred band, idle CPU.
PowerInputs idle_inputs(const DeviceProfile& p);

/// base_ma that makes the rest state integrate to `joules` over `seconds`.
double solve_idle_base(const DeviceProfile& p, double joules, double seconds);

/// cpu_coeff_ma from a median shift caused by mirroring alone.
double solve_cpu_coeff_from_shift(double median_off_ma, double median_on_ma, double overhead);

/// cpu_coeff_ma from an energy gap caused by mirroring alone over `seconds`.
double solve_cpu_coeff_from_energy_gap(double gap_joules, double voltage, double seconds, double overhead);

/// Video-playback CPU load producing `median_ma` with mirroring off.
double solve_video_cpu(const DeviceProfile& p, double median_ma);

}  // namespace pb::device::calibration
