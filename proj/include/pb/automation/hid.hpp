#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pb/automation/command.hpp"
#include "pb/common/types.hpp"

namespace pb::automation {

inline constexpr std::uint8_t kHidComboSubclass = 0xC0;
inline constexpr std::uint8_t kLeftButton = 0x01;
inline constexpr std::uint8_t kLeftShift = 0x02;
inline constexpr int kMaxMouseDelta = 127;

/// Boot-protocol mouse report: buttons, dx, dy.
struct HidMouseReport {
  std::uint8_t buttons = 0;
  std::int8_t dx = 0;
  std::int8_t dy = 0;

  bool operator==(const HidMouseReport&) const = default;
  std::array<std::uint8_t, 3> bytes() const noexcept;
  static HidMouseReport from_bytes(std::span<const std::uint8_t> b);
  /// Throws Errc::validation when dx or dy is -128.
  void validate() const;
};

/// Boot-protocol keyboard report: modifiers, reserved, six key slots.
struct HidKeyboardReport {
  std::uint8_t modifiers = 0;
  std::uint8_t reserved = 0;
  std::array<std::uint8_t, 6> keys{};

  bool operator==(const HidKeyboardReport&) const = default;
  std::array<std::uint8_t, 8> bytes() const noexcept;
  static HidKeyboardReport from_bytes(std::span<const std::uint8_t> b);
  bool is_release() const noexcept;
  void validate() const;
};

struct HidServiceDescriptor {
  std::uint8_t subclass = kHidComboSubclass;
  std::vector<std::uint8_t> report_descriptor;
};

/// Keyboard (report id 1) plus mouse (report id 2) combo device.
HidServiceDescriptor combo_service_descriptor();

/// Relative moves covering (dx, dy): each axis is consumed greedily in steps
/// of at most 127, so the reports sum to the displacement exactly.
std::vector<HidMouseReport> encode_move(int dx, int dy, std::uint8_t buttons = 0);

/// Moves the cursor from `from` to `to`, then a press/release pair if click.
std::vector<HidMouseReport> encode_pointer(Point from, Point to, bool click);

/// Enough (-127, -127) moves to pin the cursor at (0, 0) from anywhere on a
/// screen of the given size.
std::vector<HidMouseReport> encode_home(ScreenSize screen);

struct HidSwipe {
  std::vector<HidMouseReport> reports;  ///< approach, press, drag moves, release
  std::size_t drag_moves = 0;
  int inter_report_delay_ms = 0;
};

/// Approach `start` from the cursor, press, drag to `end` with N evenly
/// interpolated moves (N = ceil(max|d| / 127), at least 1), release.
HidSwipe encode_swipe(Point cursor, Point start, Point end, int duration_ms);

/// Sum of the mouse deltas.
Point integrate(std::span<const HidMouseReport> reports, Point origin = {});

struct KeyUsage {
  std::uint8_t keycode = 0;
  bool shift = false;
};

/// US layout usage for printable ASCII plus '\n' (Enter) and '\t' (Tab).
std::optional<KeyUsage> usage_for(char c) noexcept;
std::optional<char> char_for(KeyUsage usage) noexcept;

std::uint8_t usage_for(NamedKey key) noexcept;
std::optional<NamedKey> named_key_for(std::uint8_t keycode) noexcept;

/// Press then all-zero release for every character. Unmappable characters
/// raise Errc::encoding naming the first offender.
std::vector<HidKeyboardReport> encode_keystrokes(std::string_view text);
std::vector<HidKeyboardReport> encode_key(NamedKey key);

/// Inverse of encode_keystrokes: each press report contributes the
/// characters of its keycodes.
std::string decode_keystrokes(std::span<const HidKeyboardReport> reports);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace pb::automation
