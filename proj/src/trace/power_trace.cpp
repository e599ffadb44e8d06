#include "pb/trace/power_trace.hpp"

#include <cmath>

#include "pb/common/error.hpp"

namespace pb::trace {

PowerTrace::PowerTrace(TraceId id, double voltage, double sample_rate, TraceMetadata metadata)
    : id_(std::move(id)), voltage_(voltage), sample_rate_(sample_rate), metadata_(std::move(metadata)) {
  if (!(sample_rate > 0.0)) throw Error(Errc::validation, "sample rate must be positive");
  if (voltage < 0.0) throw Error(Errc::validation, "voltage must be non-negative");
}

void PowerTrace::require_open() const {
  if (sealed_) throw Error(Errc::state, "trace " + id_ + " is sealed");
}

std::span<double> PowerTrace::append_uninitialized(std::size_t n) {
  require_open();
  const std::size_t old = current_ma_.size();
  current_ma_.resize(old + n);
  return std::span<double>(current_ma_).subspan(old, n);
}

void PowerTrace::append(double current_ma) {
  require_open();
  current_ma_.push_back(current_ma < 0.0 ? 0.0 : current_ma);
}

void PowerTrace::truncate(std::size_t n) {
  require_open();
  if (n < current_ma_.size()) current_ma_.resize(n);
}

void PowerTrace::seal() { sealed_ = true; }

void PowerTrace::seal_faulted(std::string reason) {
  sealed_ = true;
  faulted_ = true;
  fault_reason_ = std::move(reason);
}

std::size_t PowerTrace::index_at_or_after(double t) const noexcept {
  if (t <= 0.0) return 0;
  // Nudge by a fraction of a tick so t = k / rate lands exactly on k.
  const double idx = std::ceil(t * sample_rate_ - 1e-6);
  if (idx >= static_cast<double>(size())) return size();
  return static_cast<std::size_t>(idx);
}

}  // namespace pb::trace
