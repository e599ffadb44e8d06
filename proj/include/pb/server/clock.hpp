#pragma once

#include <mutex>

namespace pb::server {

/// Wall-clock seconds. Injected so scheduler and refresh logic run under a
/// manual clock in tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SystemClock final : public Clock {
 public:
  double now() const override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start = 1'000'000.0) : t_(start) {}

  double now() const override {
    std::lock_guard lock(mu_);
    return t_;
  }
  void advance(double seconds) {
    std::lock_guard lock(mu_);
    t_ += seconds;
  }
  void set(double t) {
    std::lock_guard lock(mu_);
    t_ = t;
  }

 private:
  mutable std::mutex mu_;
  double t_;
};

}  // namespace pb::server
