#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::automation {

enum class Backend { usb_adb, wifi_adb, bluetooth_hid };

std::string_view to_string(Backend b) noexcept;
Backend backend_from_string(std::string_view s);

NLOHMANN_JSON_SERIALIZE_ENUM(Backend, {{Backend::usb_adb, "usb_adb"},
                                       {Backend::wifi_adb, "wifi_adb"},
                                       {Backend::bluetooth_hid, "bluetooth_hid"}})

/// Link facts the selection rules look at.
struct LinkFacts {
  Os os = Os::android;
  bool usb = true;
  WifiBand wifi = WifiBand::off;
  bool wifi_adb_enabled = false;
  bool bluetooth_paired = false;
};

struct Availability {
  bool usb_adb = false;
  bool wifi_adb = false;
  bool bluetooth_hid = false;

  bool has(Backend b) const noexcept;
  bool any() const noexcept { return usb_adb || wifi_adb || bluetooth_hid; }
};

Availability availability(const LinkFacts& link) noexcept;

/// Rule-preferred backend, ignoring availability.
Backend preferred_backend(Os os, bool meter_active, bool needs_mobile_network) noexcept;

/// Preferred backend when available, otherwise the first available of
/// WiFi-ADB, HID, USB-ADB (USB never while the meter is active). Routing
/// error when nothing qualifies. An explicit hint is honoured or refused,
/// never substituted.
Backend select_backend(const LinkFacts& link, bool meter_active, bool needs_mobile_network,
                       std::optional<Backend> hint = std::nullopt);

}  // namespace pb::automation
