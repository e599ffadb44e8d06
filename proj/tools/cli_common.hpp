#pragma once

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace pb::tools {

/// "90", "90s", "15m", "2h" -> seconds.
inline double parse_duration(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad duration '" + text + "'");
  }
  const auto unit = text.substr(used);
  if (unit.empty() || unit == "s") return value;
  if (unit == "m") return value * 60;
  if (unit == "h") return value * 3600;
  throw std::invalid_argument("bad duration unit in '" + text + "'");
}

inline volatile std::sig_atomic_t g_signalled = 0;

/// Calls `stop` from a helper thread once SIGINT or SIGTERM arrives; the
/// handler itself only sets a flag.
class SignalWatch {
 public:
  explicit SignalWatch(std::function<void()> stop) {
    std::signal(SIGINT, [](int) { g_signalled = 1; });
    std::signal(SIGTERM, [](int) { g_signalled = 1; });
    thread_ = std::thread([this, stop = std::move(stop)] {
      while (!done_ && !g_signalled) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      if (g_signalled) stop();
    });
  }
  ~SignalWatch() {
    done_ = true;
    thread_.join();
  }
  SignalWatch(const SignalWatch&) = delete;
  SignalWatch& operator=(const SignalWatch&) = delete;

 private:
  std::atomic<bool> done_{false};
  std::thread thread_;
};

}  // namespace pb::tools
