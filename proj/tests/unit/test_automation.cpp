#include <catch_amalgamated.hpp>

#include <random>

#include "device_fixtures.hpp"
#include "golden.hpp"
#include "pb/automation/adb.hpp"
#include "pb/automation/backend.hpp"
#include "pb/automation/dispatch.hpp"
#include "pb/automation/hid.hpp"
#include "pb/common/random.hpp"
#include "test_helpers.hpp"

using namespace pb;
using namespace pb::automation;

namespace {

std::string random_printable(std::mt19937_64& rng, int max_len) {
  const int len = uniform_int(rng, 0, max_len);
  std::string s;
  for (int i = 0; i < len; ++i) s += static_cast<char>(uniform_int(rng, 0x20, 0x7e));
  return s;
}

}  // namespace

TEST_CASE("adb strings follow the input tool syntax") {
  CHECK(to_adb(Tap{100, 200}) == "input tap 100 200");
  CHECK(to_adb(Swipe{0, 0, 0, 500, 300}) == "input swipe 0 0 0 500 300");
  CHECK(to_adb(Text{"a b"}) == "input text a%sb");
  CHECK(to_adb(Text{"x&y;z"}) == "input text x\\&y\\;z");
  CHECK(to_adb(Key{NamedKey::enter}) == "input keyevent KEYCODE_ENTER");
  CHECK(to_adb(Key{NamedKey::backspace}) == "input keyevent KEYCODE_DEL");
  CHECK(to_adb(LaunchApp{"com.brave.browser"}) ==
        "monkey -p com.brave.browser -c android.intent.category.LAUNCHER 1");
}

TEST_CASE("adb text encoding refuses what it cannot express") {
  CHECK(pbtest::error_code_of([] { to_adb(Text{"a\nb"}); }) == Errc::encoding);
  CHECK(pbtest::error_code_of([] { to_adb(Text{"\x01"}); }) == Errc::encoding);
  CHECK(pbtest::error_code_of([] { to_adb(Text{"100%sure"}); }) == Errc::encoding);
  CHECK(pbtest::error_code_of([] { to_adb(Wait{10}); }) == Errc::validation);
}

TEST_CASE("command invariants are validated") {
  CHECK(pbtest::error_code_of([] { validate(Tap{-1, 0}); }) == Errc::validation);
  CHECK(pbtest::error_code_of([] { validate(Swipe{0, 0, 1, 1, 0}); }) == Errc::validation);
  CHECK(pbtest::error_code_of([] { validate(Text{""}); }) == Errc::validation);
}

TEST_CASE("adb strings parse back to the command") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    auto text = random_printable(rng, 40);
    if (text.empty() || text.find("%s") != std::string::npos) continue;
    const InputCommand cmd = Text{text};
    CHECK(parse_adb_input(to_adb(cmd)) == cmd);
  }
  for (const InputCommand& cmd : std::vector<InputCommand>{Tap{3, 4}, Swipe{1, 2, 3, 4, 5}, Key{NamedKey::home},
                                                          Key{NamedKey::tab}, LaunchApp{"com.x"}}) {
    CHECK(parse_adb_input(to_adb(cmd)) == cmd);
  }
}

TEST_CASE("commands round-trip through json") {
  for (const InputCommand& cmd : std::vector<InputCommand>{Tap{3, 4}, Swipe{1, 2, 3, 4, 5}, Text{"hi there"},
                                                          Key{NamedKey::back}, LaunchApp{"a.b"}, Wait{250}}) {
    const nlohmann::json j = cmd;
    CHECK(j.get<InputCommand>() == cmd);
  }
}

TEST_CASE("pointer encoding examples") {
  CHECK(encode_pointer({0, 0}, {0, 0}, false).empty());
  const auto r = encode_pointer({0, 0}, {300, 0}, false);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == HidMouseReport{0, 127, 0});
  CHECK(r[1] == HidMouseReport{0, 127, 0});
  CHECK(r[2] == HidMouseReport{0, 46, 0});
  const auto click = encode_pointer({5, 5}, {5, 5}, true);
  REQUIRE(click.size() == 2);
  CHECK(click[0].bytes() == std::array<std::uint8_t, 3>{0x01, 0, 0});
  CHECK(click[1].bytes() == std::array<std::uint8_t, 3>{0x00, 0, 0});
}

TEST_CASE("pointer chunks integrate to the displacement") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 2000; ++i) {
    const Point from{uniform_int(rng, 0, 1079), uniform_int(rng, 0, 2339)};
    const Point to{uniform_int(rng, 0, 1079), uniform_int(rng, 0, 2339)};
    const auto reports = encode_pointer(from, to, false);
    for (const auto& r : reports) {
      CHECK(std::abs(r.dx) <= 127);
      CHECK(std::abs(r.dy) <= 127);
      CHECK_NOTHROW(HidMouseReport::from_bytes(r.bytes()));
    }
    CHECK(integrate(reports, from) == to);
  }
}

TEST_CASE("mouse report bytes reject -128") {
  const std::array<std::uint8_t, 3> bad{0, 0x80, 0};
  CHECK(pbtest::error_code_of([&] { HidMouseReport::from_bytes(bad); }) == Errc::validation);
}

TEST_CASE("swipe reports press, drag in bounded steps and release") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    const Point cursor{uniform_int(rng, 0, 719), uniform_int(rng, 0, 1279)};
    const Point a{uniform_int(rng, 0, 719), uniform_int(rng, 0, 1279)};
    const Point b{uniform_int(rng, 0, 719), uniform_int(rng, 0, 1279)};
    const int dur = uniform_int(rng, 1, 2000);
    const auto s = encode_swipe(cursor, a, b, dur);
    // position when the button goes down, and when it comes up
    Point pos = cursor;
    std::optional<Point> down, up;
    std::uint8_t buttons = 0;
    for (const auto& r : s.reports) {
      pos.x += r.dx;
      pos.y += r.dy;
      if (!buttons && r.buttons) down = pos;
      if (buttons && !r.buttons) up = pos;
      buttons = r.buttons;
    }
    REQUIRE(down);
    REQUIRE(up);
    CHECK(*down == a);
    CHECK(*up == b);
    CHECK(s.inter_report_delay_ms == dur / static_cast<int>(s.drag_moves));
  }
}

TEST_CASE("keystroke encoding examples") {
  CHECK(encode_keystrokes("").empty());
  const auto a = encode_keystrokes("a");
  REQUIRE(a.size() == 2);
  CHECK(a[0].modifiers == 0x00);
  CHECK(a[0].keys[0] == 0x04);
  CHECK(a[1].is_release());
  const auto A = encode_keystrokes("A");
  CHECK(A[0].modifiers == 0x02);
  CHECK(A[0].keys[0] == 0x04);
  CHECK(A[1].is_release());
}

TEST_CASE("unmappable characters name the offender") {
  try {
    encode_keystrokes("ok\x7f");
    FAIL("expected an encoding error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::encoding);
    CHECK(std::string(e.what()).find("0x7f") != std::string::npos);
  }
}

TEST_CASE("printable ascii round-trips through keyboard reports") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1500; ++i) {
    const auto s = random_printable(rng, 64);
    const auto reports = encode_keystrokes(s);
    CHECK(reports.size() == 2 * s.size());
    for (const auto& r : reports) {
      CHECK(r.reserved == 0);
      CHECK_NOTHROW(HidKeyboardReport::from_bytes(r.bytes()));
    }
    CHECK(decode_keystrokes(reports) == s);
  }
}

TEST_CASE("keyboard reports reject duplicates and a nonzero reserved byte") {
  const std::array<std::uint8_t, 8> dup{0, 0, 4, 4, 0, 0, 0, 0};
  const std::array<std::uint8_t, 8> reserved{0, 1, 4, 0, 0, 0, 0, 0};
  CHECK(pbtest::error_code_of([&] { HidKeyboardReport::from_bytes(dup); }) == Errc::validation);
  CHECK(pbtest::error_code_of([&] { HidKeyboardReport::from_bytes(reserved); }) == Errc::validation);
}

TEST_CASE("combo service descriptor") {
  const auto d = combo_service_descriptor();
  CHECK(d.subclass == 0xC0);
  const auto& rd = d.report_descriptor;
  auto has = [&](std::uint8_t a, std::uint8_t b) {
    for (std::size_t i = 0; i + 1 < rd.size(); ++i) {
      if (rd[i] == a && rd[i + 1] == b) return true;
    }
    return false;
  };
  CHECK(has(0x09, 0x06));  // keyboard usage
  CHECK(has(0x09, 0x02));  // mouse usage
  CHECK(has(0x85, 0x01));
  CHECK(has(0x85, 0x02));
}

TEST_CASE("golden corpus matches the encoders") {
  const auto corpus = pbtest::load_golden(std::string(PB_GOLDEN_DIR) + "/hid_reports.hex");
  using pbtest::as_bytes;
  std::map<std::string, std::vector<pbtest::ReportBytes>> actual;
  actual["mouse.click_in_place"] = as_bytes(encode_pointer({9, 9}, {9, 9}, true));
  actual["mouse.no_move"] = as_bytes(encode_pointer({9, 9}, {9, 9}, false));
  actual["mouse.right_300_then_click"] = as_bytes(encode_pointer({0, 0}, {300, 0}, true));
  actual["mouse.left_300_down_5"] = as_bytes(encode_move(-300, 5));
  actual["mouse.diagonal_200_130"] = as_bytes(encode_move(200, 130));
  actual["mouse.swipe_down_500_from_origin"] = as_bytes(encode_swipe({0, 0}, {0, 0}, {0, 500}, 300).reports);
  actual["mouse.swipe_10_10_to_310_110"] = as_bytes(encode_swipe({0, 0}, {10, 10}, {310, 110}, 300).reports);
  actual["keyboard.empty"] = as_bytes(encode_keystrokes(""));
  actual["keyboard.a"] = as_bytes(encode_keystrokes("a"));
  actual["keyboard.A"] = as_bytes(encode_keystrokes("A"));
  actual["keyboard.Hi_1!"] = as_bytes(encode_keystrokes("Hi 1!"));
  actual["keyboard.url"] = as_bytes(encode_keystrokes("l.c/?"));
  actual["keyboard.enter_tab"] = as_bytes(encode_keystrokes("\n\t"));
  actual["keyboard.key_back"] = as_bytes(encode_key(NamedKey::back));
  actual["keyboard.key_home"] = as_bytes(encode_key(NamedKey::home));
  actual["keyboard.key_backspace"] = as_bytes(encode_key(NamedKey::backspace));
  REQUIRE(corpus.size() == actual.size());
  for (const auto& [name, expected] : corpus) {
    INFO(name);
    REQUIRE(actual.count(name));
    CHECK(actual.at(name) == expected);
  }
}

TEST_CASE("backend selection rules") {
  LinkFacts android{Os::android, true, WifiBand::ghz_5, true, true};
  CHECK(select_backend(android, false, false) == Backend::usb_adb);
  android.usb = false;
  CHECK(select_backend(android, true, false) == Backend::wifi_adb);
  CHECK(select_backend(android, true, true) == Backend::bluetooth_hid);
  LinkFacts ios{Os::ios, true, WifiBand::ghz_5, false, true};
  CHECK(select_backend(ios, false, false) == Backend::bluetooth_hid);
  CHECK(select_backend(ios, true, true) == Backend::bluetooth_hid);
}

TEST_CASE("backend selection falls back and refuses unavailable hints") {
  LinkFacts l{Os::android, false, WifiBand::ghz_2_4, true, false};
  CHECK(select_backend(l, false, false) == Backend::wifi_adb);
  CHECK(pbtest::error_code_of([&] { select_backend(l, false, false, Backend::usb_adb); }) == Errc::routing);
  LinkFacts nothing{Os::ios, false, WifiBand::off, false, false};
  CHECK(pbtest::error_code_of([&] { select_backend(nothing, false, false); }) == Errc::routing);
  LinkFacts usb_only{Os::android, true, WifiBand::off, false, false};
  CHECK(pbtest::error_code_of([&] { select_backend(usb_only, true, false); }) == Errc::routing);
}

TEST_CASE("selection is a pure function of its inputs") {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 1000; ++i) {
    LinkFacts l{uniform_int(rng, 0, 1) ? Os::ios : Os::android, uniform_int(rng, 0, 1) == 1,
                static_cast<WifiBand>(uniform_int(rng, 0, 2)), uniform_int(rng, 0, 1) == 1,
                uniform_int(rng, 0, 1) == 1};
    const bool meter = uniform_int(rng, 0, 1);
    const bool mobile = uniform_int(rng, 0, 1);
    std::optional<Backend> first, second;
    try {
      first = select_backend(l, meter, mobile);
    } catch (const Error&) {
    }
    try {
      second = select_backend(l, meter, mobile);
    } catch (const Error&) {
    }
    CHECK(first == second);
  }
}

TEST_CASE("tap through wifi adb and hid land on the same app") {
  auto a = pbtest::make_device("a");
  auto b = pbtest::make_device("b");
  const auto icon = a->active_scene().find(device::TargetAction::launch_app, device::kVideoPlayer)->rect.center();
  HidCursor ca, cb;
  dispatch(Tap{icon.x, icon.y}, *a, Backend::wifi_adb, ca);
  const auto rep = dispatch(Tap{icon.x, icon.y}, *b, Backend::bluetooth_hid, cb);
  CHECK(a->state().foreground == device::kVideoPlayer);
  CHECK(b->state().foreground == device::kVideoPlayer);
  CHECK(a->observable_state() == b->observable_state());
  CHECK(rep.delivered == rep.wire.size());
  CHECK(cb.position == icon);
}

TEST_CASE("hid swipe path visits the start and end points") {
  auto dev = pbtest::make_device();
  HidCursor cursor;
  const auto rep = dispatch(Swipe{100, 900, 120, 300, 400}, *dev, Backend::bluetooth_hid, cursor);
  Point pos{};
  bool pressed = false;
  std::vector<Point> press_points, release_points;
  for (const auto& hex : rep.wire) {
    std::vector<std::uint8_t> b;
    std::istringstream in(hex);
    std::string byte;
    while (in >> byte) b.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
    const auto r = HidMouseReport::from_bytes(b);
    pos.x = std::clamp(pos.x + r.dx, 0, 719);
    pos.y = std::clamp(pos.y + r.dy, 0, 1279);
    if (!pressed && r.buttons) press_points.push_back(pos);
    if (pressed && !r.buttons) release_points.push_back(pos);
    pressed = r.buttons;
  }
  REQUIRE(press_points.size() == 1);
  REQUIRE(release_points.size() == 1);
  CHECK(press_points[0] == Point{100, 900});
  CHECK(release_points[0] == Point{120, 300});
}

TEST_CASE("lost link mid-dispatch reports the delivered prefix") {
  auto dev = pbtest::make_device();
  HidCursor cursor;
  DispatchContext ctx;
  ctx.link_alive = [](std::size_t unit) { return unit < 3; };
  try {
    dispatch(Text{"hello"}, *dev, Backend::bluetooth_hid, cursor, ctx);
    FAIL("expected partial delivery");
  } catch (const PartialDeliveryError& e) {
    CHECK(e.delivered() == 3);
  }
}

TEST_CASE("positional commands outside the screen are rejected before delivery") {
  auto dev = pbtest::make_device();
  HidCursor cursor;
  CHECK(pbtest::error_code_of([&] { dispatch(Tap{720, 10}, *dev, Backend::wifi_adb, cursor); }) == Errc::bounds);
  CHECK(pbtest::error_code_of([&] { dispatch(Tap{10, 1280}, *dev, Backend::bluetooth_hid, cursor); }) == Errc::bounds);
  CHECK_FALSE(cursor.homed);
}
