#include "pb/device/calibration.hpp"

#include "pb/common/error.hpp"

namespace pb::device::calibration {

PowerInputs idle_inputs(const DeviceProfile& p) {
  return {kSetupBrightness, p.idle_cpu, false, p.preferred_band(), false};
}

double solve_idle_base(const DeviceProfile& p, double joules, double seconds) {
  if (seconds <= 0) throw Error(Errc::validation, "seconds must be > 0");
  auto m = p.model;
  m.base_ma = 0.0;
  const double target_ma = joules / (m.supply_voltage * seconds) * 1000.0;
  return target_ma - m.mean_current_ma(idle_inputs(p));
}

double solve_cpu_coeff_from_shift(double median_off_ma, double median_on_ma, double overhead) {
  if (overhead <= 0) throw Error(Errc::validation, "overhead must be > 0");
  return (median_on_ma - median_off_ma) / overhead;
}

double solve_cpu_coeff_from_energy_gap(double gap_joules, double voltage, double seconds, double overhead) {
  if (overhead <= 0 || voltage <= 0 || seconds <= 0) throw Error(Errc::validation, "non-positive calibration input");
  return gap_joules / (voltage * seconds * overhead) * 1000.0;
}

double solve_video_cpu(const DeviceProfile& p, double median_ma) {
  if (p.model.cpu_coeff_ma <= 0) throw Error(Errc::validation, "cpu coefficient must be > 0");
  auto in = idle_inputs(p);
  in.cpu_load = 0.0;
  return (median_ma - p.model.mean_current_ma(in)) / p.model.cpu_coeff_ma;
}

}  // namespace pb::device::calibration
