#include "pb/automation/backend.hpp"

#include <string>

#include "pb/common/error.hpp"

namespace pb::automation {

std::string_view to_string(Backend b) noexcept {
  switch (b) {
    case Backend::usb_adb: return "usb_adb";
    case Backend::wifi_adb: return "wifi_adb";
    case Backend::bluetooth_hid: return "bluetooth_hid";
  }
  return "usb_adb";
}

Backend backend_from_string(std::string_view s) {
  for (auto b : {Backend::usb_adb, Backend::wifi_adb, Backend::bluetooth_hid}) {
    if (to_string(b) == s) return b;
  }
  throw Error(Errc::validation, "unknown automation backend '" + std::string(s) + "'");
}

bool Availability::has(Backend b) const noexcept {
  switch (b) {
    case Backend::usb_adb: return usb_adb;
    case Backend::wifi_adb: return wifi_adb;
    case Backend::bluetooth_hid: return bluetooth_hid;
  }
  return false;
}

Availability availability(const LinkFacts& link) noexcept {
  const bool android = link.os == Os::android;
  return {android && link.usb, android && link.wifi != WifiBand::off && link.wifi_adb_enabled, link.bluetooth_paired};
}

Backend preferred_backend(Os os, bool meter_active, bool needs_mobile_network) noexcept {
  if (os == Os::ios) return Backend::bluetooth_hid;
  if (!meter_active) return Backend::usb_adb;
  return needs_mobile_network ? Backend::bluetooth_hid : Backend::wifi_adb;
}

Backend select_backend(const LinkFacts& link, bool meter_active, bool needs_mobile_network,
                       std::optional<Backend> hint) {
  const auto avail = availability(link);
  if (hint) {
    if (!avail.has(*hint) || (*hint == Backend::usb_adb && meter_active)) {
      throw Error(Errc::routing, std::string(to_string(*hint)) + " is unavailable for this device");
    }
    return *hint;
  }
  const auto preferred = preferred_backend(link.os, meter_active, needs_mobile_network);
  if (avail.has(preferred)) return preferred;
  for (auto b : {Backend::wifi_adb, Backend::bluetooth_hid, Backend::usb_adb}) {
    if (b == Backend::usb_adb && meter_active) continue;
    if (avail.has(b)) return b;
  }
  throw Error(Errc::routing, "no automation backend available");
}

}  // namespace pb::automation
