#include "pb/scenarios/calibrate.hpp"

#include <cmath>

#include "pb/device/calibration.hpp"
#include "pb/replay/replayer.hpp"
#include "pb/scenarios/workloads.hpp"

namespace pb::scenarios {

namespace cal = device::calibration;

bool CalibratedValue::matches(double tolerance) const noexcept { return std::abs(shipped - solved) <= tolerance; }

void to_json(nlohmann::json& j, const CalibratedValue& v) {
  j = {{"profile", v.profile}, {"coefficient", v.coefficient}, {"shipped", v.shipped},
       {"solved", v.solved},   {"anchor", v.anchor}};
}

namespace {

// Replay energy is affine in base_ma as long as no sample clamps at zero,
// which holds with noise off: E(base) = E(0) + base * V * T.
double solve_replay_base(device::DeviceProfile p, double joules) {
  p.model.base_ma = 0.0;
  UsabilityOptions o;
  o.profile_override = p;
  o.noise_ma = 0.0;
  const auto study = run_usability_study(o);
  const double seconds = study.replayed.duration_s;
  return (joules - study.replayed.energy_j) / (p.model.supply_voltage * seconds) * 1000.0;
}

}  // namespace

std::vector<CalibratedValue> calibrate_presets() {
  std::vector<CalibratedValue> out;
  const auto& j7 = device::find_profile("J7DUO");
  const auto& lmx = device::find_profile("LMX210");
  const auto& smj = device::find_profile("SMJ337A");

  out.push_back({"J7DUO", "cpu_coeff_ma", j7.model.cpu_coeff_ma,
                 cal::solve_cpu_coeff_from_shift(cal::kVideoMedianMa, cal::kVideoMirroredMedianMa,
                                                 j7.model.mirroring_cpu_overhead),
                 "video median 160 -> 220 mA with mirroring"});
  out.push_back({"J7DUO", "video_cpu", j7.video_cpu, cal::solve_video_cpu(j7, cal::kVideoMedianMa),
                 "video median 160 mA without mirroring"});
  out.push_back({"J7DUO", "base_ma", j7.model.base_ma,
                 cal::solve_idle_base(j7, cal::kJ7duoIdleJoules, cal::kIdleSeconds), "359 J idle over 600 s"});
  out.push_back({"LMX210", "base_ma", lmx.model.base_ma,
                 cal::solve_idle_base(lmx, cal::kLmx210IdleJoules, cal::kIdleSeconds), "270 J idle over 600 s"});
  out.push_back({"SMJ337A", "cpu_coeff_ma", smj.model.cpu_coeff_ma,
                 cal::solve_cpu_coeff_from_energy_gap(cal::kNewsRecordedJoules - cal::kNewsReplayJoules,
                                                      smj.model.supply_voltage, cal::kNewsSeconds,
                                                      smj.model.mirroring_cpu_overhead),
                 "news workload 399 J recorded vs 345 J replayed over 380 s"});
  out.push_back({"SMJ337A", "base_ma", smj.model.base_ma, solve_replay_base(smj, cal::kNewsReplayJoules),
                 "news workload replay 345 J over 380 s"});
  return out;
}

}  // namespace pb::scenarios
