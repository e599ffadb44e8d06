#include "pb/device/power_model.hpp"

#include <algorithm>

#include "pb/common/error.hpp"

namespace pb::device {

double PowerModel::wifi_ma(WifiBand band) const noexcept {
  switch (band) {
    case WifiBand::ghz_2_4: return wifi_24_ma;
    case WifiBand::ghz_5: return wifi_5_ma;
    case WifiBand::off: return 0.0;
  }
  return 0.0;
}

double PowerModel::effective_cpu(double cpu_load, bool mirroring) const noexcept {
  return std::min(1.0, cpu_load + (mirroring ? mirroring_cpu_overhead : 0.0));
}

double PowerModel::mean_current_ma(const PowerInputs& in) const noexcept {
  const double i = base_ma + brightness_coeff_ma * in.brightness + cpu_coeff_ma * effective_cpu(in.cpu_load, in.mirroring) +
                   wifi_ma(in.wifi) + (in.bluetooth ? bluetooth_ma : 0.0);
  return std::max(0.0, i);
}

void PowerModel::validate() const {
  for (double c : {base_ma, brightness_coeff_ma, cpu_coeff_ma, wifi_24_ma, wifi_5_ma, bluetooth_ma,
                   mirroring_cpu_overhead, noise_ma}) {
    if (c < 0) throw Error(Errc::validation, "power model coefficients must be >= 0");
  }
  if (supply_voltage <= 0) throw Error(Errc::validation, "supply voltage must be > 0");
}

void to_json(nlohmann::json& j, const PowerModel& m) {
  j = {{"base_ma", m.base_ma},
       {"brightness_coeff_ma", m.brightness_coeff_ma},
       {"cpu_coeff_ma", m.cpu_coeff_ma},
       {"wifi_24_ma", m.wifi_24_ma},
       {"wifi_5_ma", m.wifi_5_ma},
       {"bluetooth_ma", m.bluetooth_ma},
       {"mirroring_cpu_overhead", m.mirroring_cpu_overhead},
       {"noise_ma", m.noise_ma},
       {"supply_voltage", m.supply_voltage}};
}

void from_json(const nlohmann::json& j, PowerModel& m) {
  m.base_ma = j.value("base_ma", m.base_ma);
  m.brightness_coeff_ma = j.value("brightness_coeff_ma", m.brightness_coeff_ma);
  m.cpu_coeff_ma = j.value("cpu_coeff_ma", m.cpu_coeff_ma);
  m.wifi_24_ma = j.value("wifi_24_ma", m.wifi_24_ma);
  m.wifi_5_ma = j.value("wifi_5_ma", m.wifi_5_ma);
  m.bluetooth_ma = j.value("bluetooth_ma", m.bluetooth_ma);
  m.mirroring_cpu_overhead = j.value("mirroring_cpu_overhead", m.mirroring_cpu_overhead);
  m.noise_ma = j.value("noise_ma", m.noise_ma);
  m.supply_voltage = j.value("supply_voltage", m.supply_voltage);
  m.validate();
}

}  // namespace pb::device
