#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/automation/backend.hpp"
#include "pb/automation/command.hpp"
#include "pb/common/types.hpp"

namespace pb::device {
class SimDevice;
}

namespace pb::automation {

// Per-unit transport latencies on the device timeline.
inline constexpr int kUsbAdbLatencyMs = 30;
inline constexpr int kWifiAdbLatencyMs = 60;
inline constexpr int kHidReportMs = 8;

/// Where the HID backend believes the device pointer is.
struct HidCursor {
  Point position{};
  bool homed = false;
};

struct DispatchContext {
  /// Lets device time pass; the controller records samples meanwhile.
  std::function<void(int ms)> wait;
  /// Consulted before each wire unit; false simulates losing the link.
  std::function<bool(std::size_t unit)> link_alive;
};

struct DeliveryReport {
  Backend backend = Backend::usb_adb;
  std::vector<std::string> wire;  ///< shell lines or hex reports, in order
  std::size_t delivered = 0;
  std::vector<std::string> ack;  ///< device-side state changes
  int elapsed_ms = 0;
};

void to_json(nlohmann::json& j, const DeliveryReport& r);

/// Delivers one command through `backend`. Positional commands outside the
/// screen raise Errc::bounds before anything is sent; a lost link raises
/// PartialDeliveryError carrying the number of units already delivered.
DeliveryReport dispatch(const InputCommand& cmd, device::SimDevice& dev, Backend backend, HidCursor& cursor,
                        const DispatchContext& ctx = {});

}  // namespace pb::automation
