#pragma once

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::device {

struct PowerInputs {
  int brightness = 0;     ///< 0..250
  double cpu_load = 0.0;  ///< 0..1, before mirroring overhead
  bool mirroring = false;
  WifiBand wifi = WifiBand::off;
  bool bluetooth = false;
};

/// Affine current model. All coefficients in mA; cpu_coeff_ma is the draw at
/// full effective load.
struct PowerModel {
  double base_ma = 0.0;
  double brightness_coeff_ma = 0.0;  ///< per brightness unit
  double cpu_coeff_ma = 0.0;
  double wifi_24_ma = 0.0;
  double wifi_5_ma = 0.0;
  double bluetooth_ma = 0.0;
  double mirroring_cpu_overhead = 0.15;
  double noise_ma = 5.0;  ///< Gaussian sigma
  double supply_voltage = 3.85;

  double wifi_ma(WifiBand band) const noexcept;
  double effective_cpu(double cpu_load, bool mirroring) const noexcept;
  /// Noise-free current, clamped at 0.
  double mean_current_ma(const PowerInputs& in) const noexcept;
  /// Throws Errc::validation on a negative coefficient or non-positive voltage.
  void validate() const;
};

void to_json(nlohmann::json& j, const PowerModel& m);
void from_json(const nlohmann::json& j, PowerModel& m);

}  // namespace pb::device
