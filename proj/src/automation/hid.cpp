#include "pb/automation/hid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "pb/common/error.hpp"

namespace pb::automation {

namespace {

// US layout rows: unshifted, shifted, keycode.
struct LayoutEntry {
  char plain;
  char shifted;
  std::uint8_t keycode;
};

constexpr LayoutEntry kSymbols[] = {
    {'1', '!', 0x1E}, {'2', '@', 0x1F}, {'3', '#', 0x20}, {'4', '$', 0x21}, {'5', '%', 0x22},
    {'6', '^', 0x23}, {'7', '&', 0x24}, {'8', '*', 0x25}, {'9', '(', 0x26}, {'0', ')', 0x27},
    {'-', '_', 0x2D}, {'=', '+', 0x2E}, {'[', '{', 0x2F}, {']', '}', 0x30}, {'\\', '|', 0x31},
    {';', ':', 0x33}, {'\'', '"', 0x34}, {'`', '~', 0x35}, {',', '<', 0x36}, {'.', '>', 0x37},
    {'/', '?', 0x38},
};

constexpr std::uint8_t kEnter = 0x28;
constexpr std::uint8_t kEscape = 0x29;
constexpr std::uint8_t kBackspace = 0x2A;
constexpr std::uint8_t kTab = 0x2B;
constexpr std::uint8_t kSpace = 0x2C;
constexpr std::uint8_t kHome = 0x4A;

int sign(int v) { return (v > 0) - (v < 0); }

HidKeyboardReport press(KeyUsage u) {
  HidKeyboardReport r;
  r.modifiers = u.shift ? kLeftShift : 0;
  r.keys[0] = u.keycode;
  return r;
}

}  // namespace

std::array<std::uint8_t, 3> HidMouseReport::bytes() const noexcept {
  return {buttons, static_cast<std::uint8_t>(dx), static_cast<std::uint8_t>(dy)};
}

HidMouseReport HidMouseReport::from_bytes(std::span<const std::uint8_t> b) {
  if (b.size() != 3) throw Error(Errc::validation, "mouse report must be 3 bytes");
  HidMouseReport r{b[0], static_cast<std::int8_t>(b[1]), static_cast<std::int8_t>(b[2])};
  r.validate();
  return r;
}

void HidMouseReport::validate() const {
  if (dx < -kMaxMouseDelta || dy < -kMaxMouseDelta) throw Error(Errc::validation, "mouse delta outside +-127");
}

std::array<std::uint8_t, 8> HidKeyboardReport::bytes() const noexcept {
  return {modifiers, reserved, keys[0], keys[1], keys[2], keys[3], keys[4], keys[5]};
}

HidKeyboardReport HidKeyboardReport::from_bytes(std::span<const std::uint8_t> b) {
  if (b.size() != 8) throw Error(Errc::validation, "keyboard report must be 8 bytes");
  HidKeyboardReport r;
  r.modifiers = b[0];
  r.reserved = b[1];
  std::copy(b.begin() + 2, b.end(), r.keys.begin());
  r.validate();
  return r;
}

bool HidKeyboardReport::is_release() const noexcept {
  return modifiers == 0 && std::all_of(keys.begin(), keys.end(), [](auto k) { return k == 0; });
}

void HidKeyboardReport::validate() const {
  if (reserved != 0) throw Error(Errc::validation, "keyboard reserved byte must be 0x00");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] == 0) continue;
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (keys[j] == keys[i]) throw Error(Errc::validation, "duplicate keycode in keyboard report");
    }
  }
}

HidServiceDescriptor combo_service_descriptor() {
  HidServiceDescriptor d;
  d.report_descriptor = {
      // keyboard, report id 1
      0x05, 0x01, 0x09, 0x06, 0xA1, 0x01, 0x85, 0x01,
      0x05, 0x07, 0x19, 0xE0, 0x29, 0xE7, 0x15, 0x00, 0x25, 0x01, 0x75, 0x01, 0x95, 0x08, 0x81, 0x02,
      0x95, 0x01, 0x75, 0x08, 0x81, 0x01,
      0x95, 0x06, 0x75, 0x08, 0x15, 0x00, 0x25, 0x65, 0x05, 0x07, 0x19, 0x00, 0x29, 0x65, 0x81, 0x00,
      0xC0,
      // mouse, report id 2
      0x05, 0x01, 0x09, 0x02, 0xA1, 0x01, 0x85, 0x02, 0x09, 0x01, 0xA1, 0x00,
      0x05, 0x09, 0x19, 0x01, 0x29, 0x03, 0x15, 0x00, 0x25, 0x01, 0x95, 0x03, 0x75, 0x01, 0x81, 0x02,
      0x95, 0x01, 0x75, 0x05, 0x81, 0x01,
      0x05, 0x01, 0x09, 0x30, 0x09, 0x31, 0x15, 0x81, 0x25, 0x7F, 0x75, 0x08, 0x95, 0x02, 0x81, 0x06,
      0xC0, 0xC0,
  };
  return d;
}

std::vector<HidMouseReport> encode_move(int dx, int dy, std::uint8_t buttons) {
  std::vector<HidMouseReport> out;
  while (dx != 0 || dy != 0) {
    const int sx = sign(dx) * std::min(std::abs(dx), kMaxMouseDelta);
    const int sy = sign(dy) * std::min(std::abs(dy), kMaxMouseDelta);
    out.push_back({buttons, static_cast<std::int8_t>(sx), static_cast<std::int8_t>(sy)});
    dx -= sx;
    dy -= sy;
  }
  return out;
}

std::vector<HidMouseReport> encode_pointer(Point from, Point to, bool click) {
  auto out = encode_move(to.x - from.x, to.y - from.y);
  if (click) {
    out.push_back({kLeftButton, 0, 0});
    out.push_back({0, 0, 0});
  }
  return out;
}

std::vector<HidMouseReport> encode_home(ScreenSize screen) {
  const int n = (std::max(screen.width, screen.height) + kMaxMouseDelta - 1) / kMaxMouseDelta;
  return std::vector<HidMouseReport>(static_cast<std::size_t>(n), HidMouseReport{0, -kMaxMouseDelta, -kMaxMouseDelta});
}

HidSwipe encode_swipe(Point cursor, Point start, Point end, int duration_ms) {
  HidSwipe s;
  s.reports = encode_move(start.x - cursor.x, start.y - cursor.y);
  s.reports.push_back({kLeftButton, 0, 0});
  const int dx = end.x - start.x;
  const int dy = end.y - start.y;
  const int span = std::max(std::abs(dx), std::abs(dy));
  const int n = std::max(1, (span + kMaxMouseDelta - 1) / kMaxMouseDelta);
  int px = 0;
  int py = 0;
  for (int k = 1; k <= n; ++k) {
    const int x = static_cast<int>(std::lround(static_cast<double>(k) * dx / n));
    const int y = static_cast<int>(std::lround(static_cast<double>(k) * dy / n));
    s.reports.push_back({kLeftButton, static_cast<std::int8_t>(x - px), static_cast<std::int8_t>(y - py)});
    px = x;
    py = y;
  }
  s.reports.push_back({0, 0, 0});
  s.drag_moves = static_cast<std::size_t>(n);
  s.inter_report_delay_ms = duration_ms / n;
  return s;
}

Point integrate(std::span<const HidMouseReport> reports, Point origin) {
  for (const auto& r : reports) {
    origin.x += r.dx;
    origin.y += r.dy;
  }
  return origin;
}

std::optional<KeyUsage> usage_for(char c) noexcept {
  if (c >= 'a' && c <= 'z') return KeyUsage{static_cast<std::uint8_t>(0x04 + (c - 'a')), false};
  if (c >= 'A' && c <= 'Z') return KeyUsage{static_cast<std::uint8_t>(0x04 + (c - 'A')), true};
  if (c == ' ') return KeyUsage{kSpace, false};
  if (c == '\n') return KeyUsage{kEnter, false};
  if (c == '\t') return KeyUsage{kTab, false};
  for (const auto& e : kSymbols) {
    if (e.plain == c) return KeyUsage{e.keycode, false};
    if (e.shifted == c) return KeyUsage{e.keycode, true};
  }
  return std::nullopt;
}

std::optional<char> char_for(KeyUsage u) noexcept {
  if (u.keycode >= 0x04 && u.keycode <= 0x1D) {
    return static_cast<char>((u.shift ? 'A' : 'a') + (u.keycode - 0x04));
  }
  if (u.keycode == kSpace) return ' ';
  if (u.keycode == kEnter) return '\n';
  if (u.keycode == kTab) return '\t';
  for (const auto& e : kSymbols) {
    if (e.keycode == u.keycode) return u.shift ? e.shifted : e.plain;
  }
  return std::nullopt;
}

std::uint8_t usage_for(NamedKey key) noexcept {
  switch (key) {
    case NamedKey::enter: return kEnter;
    case NamedKey::tab: return kTab;
    case NamedKey::backspace: return kBackspace;
    case NamedKey::back: return kEscape;
    case NamedKey::home: return kHome;
  }
  return kEnter;
}

std::optional<NamedKey> named_key_for(std::uint8_t keycode) noexcept {
  switch (keycode) {
    case kEnter: return NamedKey::enter;
    case kTab: return NamedKey::tab;
    case kBackspace: return NamedKey::backspace;
    case kEscape: return NamedKey::back;
    case kHome: return NamedKey::home;
    default: return std::nullopt;
  }
}

std::vector<HidKeyboardReport> encode_keystrokes(std::string_view text) {
  std::vector<HidKeyboardReport> out;
  out.reserve(text.size() * 2);
  for (char c : text) {
    const auto u = usage_for(c);
    if (!u) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "unmappable character 0x%02x", static_cast<unsigned char>(c));
      throw Error(Errc::encoding, buf);
    }
    out.push_back(press(*u));
    out.push_back(HidKeyboardReport{});
  }
  return out;
}

std::vector<HidKeyboardReport> encode_key(NamedKey key) {
  return {press({usage_for(key), false}), HidKeyboardReport{}};
}

std::string decode_keystrokes(std::span<const HidKeyboardReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    for (auto k : r.keys) {
      if (k == 0) continue;
      if (auto c = char_for({k, (r.modifiers & kLeftShift) != 0})) out += *c;
    }
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string out;
  char buf[4];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%02x", bytes[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

}  // namespace pb::automation
