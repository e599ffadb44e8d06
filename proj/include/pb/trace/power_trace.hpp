#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pb/common/types.hpp"

namespace pb::trace {

struct PowerSample {
  double t = 0.0;           ///< seconds since trace start
  double current_ma = 0.0;  ///< clamped at >= 0
};

struct TraceMetadata {
  DeviceId device_id;
  JobId job_id;
  double started_at = 0.0;  ///< controller clock, seconds
};

/// Fixed-rate current trace at a constant supply voltage. Sample i sits at
/// t = i / sample_rate; only currents are stored.
class PowerTrace {
 public:
  PowerTrace(TraceId id, double voltage, double sample_rate, TraceMetadata metadata = {});

  const TraceId& id() const noexcept { return id_; }
  double voltage() const noexcept { return voltage_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double sample_period() const noexcept { return 1.0 / sample_rate_; }
  const TraceMetadata& metadata() const noexcept { return metadata_; }

  std::size_t size() const noexcept { return current_ma_.size(); }
  bool empty() const noexcept { return current_ma_.empty(); }
  double duration() const noexcept { return static_cast<double>(size()) / sample_rate_; }
  double time_at(std::size_t i) const noexcept { return static_cast<double>(i) / sample_rate_; }
  PowerSample sample(std::size_t i) const { return {time_at(i), current_ma_.at(i)}; }
  std::span<const double> currents() const noexcept { return current_ma_; }

  /// Grows the buffer by n and returns the new tail for the producer to fill.
  std::span<double> append_uninitialized(std::size_t n);
  void append(double current_ma);
  void truncate(std::size_t n);

  void seal();
  void seal_faulted(std::string reason);
  bool sealed() const noexcept { return sealed_; }
  bool faulted() const noexcept { return faulted_; }
  const std::string& fault_reason() const noexcept { return fault_reason_; }

  /// Index of the first sample at or after time t (clamped to size()).
  std::size_t index_at_or_after(double t) const noexcept;

 private:
  void require_open() const;

  TraceId id_;
  double voltage_;
  double sample_rate_;
  TraceMetadata metadata_;
  std::vector<double> current_ma_;
  bool sealed_ = false;
  bool faulted_ = false;
  std::string fault_reason_;
};

}  // namespace pb::trace
