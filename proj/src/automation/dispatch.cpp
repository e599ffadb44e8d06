#include "pb/automation/dispatch.hpp"

#include "pb/automation/adb.hpp"
#include "pb/automation/hid.hpp"
#include "pb/common/error.hpp"
#include "pb/device/sim_device.hpp"

namespace pb::automation {

namespace {

class Wire {
 public:
  Wire(DeliveryReport& report, const DispatchContext& ctx) : report_(report), ctx_(ctx) {}

  void check_link() {
    if (ctx_.link_alive && !ctx_.link_alive(report_.delivered)) {
      throw PartialDeliveryError(report_.delivered, "link lost after " + std::to_string(report_.delivered) +
                                                        " of the command's units were delivered");
    }
  }

  void sent(std::string unit, const device::StateDelta& delta) {
    report_.wire.push_back(std::move(unit));
    ++report_.delivered;
    report_.ack.insert(report_.ack.end(), delta.changes.begin(), delta.changes.end());
  }

  void wait(int ms) {
    if (ms <= 0) return;
    report_.elapsed_ms += ms;
    if (ctx_.wait) ctx_.wait(ms);
  }

 private:
  DeliveryReport& report_;
  const DispatchContext& ctx_;
};

void check_bounds(const InputCommand& cmd, ScreenSize screen) {
  auto inside = [&](int x, int y) {
    if (!screen.contains(x, y)) {
      throw Error(Errc::bounds, "point (" + std::to_string(x) + "," + std::to_string(y) + ") outside the screen");
    }
  };
  if (const auto* t = std::get_if<Tap>(&cmd)) inside(t->x, t->y);
  if (const auto* s = std::get_if<Swipe>(&cmd)) {
    inside(s->x1, s->y1);
    inside(s->x2, s->y2);
  }
}

void send_mouse(Wire& wire, device::SimDevice& dev, HidCursor& cursor, const std::vector<HidMouseReport>& reports,
                int delay_ms) {
  for (const auto& r : reports) {
    wire.check_link();
    const auto delta = dev.hid_mouse(r);
    cursor.position.x += r.dx;
    cursor.position.y += r.dy;
    wire.sent(to_hex(r.bytes()), delta);
    wire.wait(delay_ms);
  }
}

void send_keys(Wire& wire, device::SimDevice& dev, const std::vector<HidKeyboardReport>& reports) {
  for (const auto& r : reports) {
    wire.check_link();
    const auto delta = dev.hid_keyboard(r);
    wire.sent(to_hex(r.bytes()), delta);
    wire.wait(kHidReportMs);
  }
}

void home_cursor(Wire& wire, device::SimDevice& dev, HidCursor& cursor) {
  if (cursor.homed) return;
  send_mouse(wire, dev, cursor, encode_home(dev.screen()), kHidReportMs);
  cursor.position = {0, 0};
  cursor.homed = true;
}

void hid_tap(Wire& wire, device::SimDevice& dev, HidCursor& cursor, Point target) {
  home_cursor(wire, dev, cursor);
  send_mouse(wire, dev, cursor, encode_pointer(cursor.position, target, true), kHidReportMs);
}

void dispatch_hid(const InputCommand& cmd, device::SimDevice& dev, HidCursor& cursor, Wire& wire) {
  if (const auto* t = std::get_if<Tap>(&cmd)) {
    hid_tap(wire, dev, cursor, {t->x, t->y});
  } else if (const auto* s = std::get_if<Swipe>(&cmd)) {
    home_cursor(wire, dev, cursor);
    auto plan = encode_swipe(cursor.position, {s->x1, s->y1}, {s->x2, s->y2}, s->duration_ms);
    const std::size_t approach = plan.reports.size() - plan.drag_moves - 2;
    std::vector<HidMouseReport> lead(plan.reports.begin(), plan.reports.begin() + static_cast<long>(approach + 1));
    std::vector<HidMouseReport> drag(plan.reports.begin() + static_cast<long>(approach + 1), plan.reports.end() - 1);
    send_mouse(wire, dev, cursor, lead, kHidReportMs);
    send_mouse(wire, dev, cursor, drag, plan.inter_report_delay_ms);
    send_mouse(wire, dev, cursor, {plan.reports.back()}, kHidReportMs);
  } else if (const auto* x = std::get_if<Text>(&cmd)) {
    send_keys(wire, dev, encode_keystrokes(x->text));
  } else if (const auto* k = std::get_if<Key>(&cmd)) {
    send_keys(wire, dev, encode_key(k->key));
  } else if (const auto* l = std::get_if<LaunchApp>(&cmd)) {
    if (!dev.installed(l->app_id)) throw Error(Errc::not_found, "app '" + l->app_id + "' is not installed");
    send_keys(wire, dev, encode_key(NamedKey::home));
    const auto* icon = dev.active_scene().find(device::TargetAction::launch_app, l->app_id);
    if (!icon) throw Error(Errc::not_found, "no launcher icon for '" + l->app_id + "'");
    hid_tap(wire, dev, cursor, icon->rect.center());
  }
}

void dispatch_adb(const InputCommand& cmd, device::SimDevice& dev, Backend backend, Wire& wire) {
  const std::string line = to_adb(cmd);
  wire.check_link();
  const auto result = dev.adb_shell(line);
  if (result.exit_code != 0) {
    throw Error(Errc::unavailable, "device rejected '" + line + "': " + result.output);
  }
  device::StateDelta delta;
  for (std::size_t pos = 0, next; pos < result.output.size(); pos = next + 1) {
    next = result.output.find('\n', pos);
    if (next == std::string::npos) next = result.output.size();
    auto piece = result.output.substr(pos, next - pos);
    if (!piece.empty() && piece.rfind("Events injected", 0) != 0) delta.changes.push_back(std::move(piece));
  }
  wire.sent(line, delta);
  wire.wait((backend == Backend::usb_adb ? kUsbAdbLatencyMs : kWifiAdbLatencyMs) + gesture_duration_ms(cmd));
}

}  // namespace

void to_json(nlohmann::json& j, const DeliveryReport& r) {
  j = {{"backend", r.backend}, {"wire", r.wire}, {"delivered", r.delivered}, {"ack", r.ack},
       {"elapsed_ms", r.elapsed_ms}};
}

DeliveryReport dispatch(const InputCommand& cmd, device::SimDevice& dev, Backend backend, HidCursor& cursor,
                        const DispatchContext& ctx) {
  validate(cmd);
  check_bounds(cmd, dev.screen());
  DeliveryReport report;
  report.backend = backend;
  Wire wire(report, ctx);
  if (const auto* w = std::get_if<Wait>(&cmd)) {
    wire.wait(w->ms);
    return report;
  }
  if (backend == Backend::bluetooth_hid) {
    dispatch_hid(cmd, dev, cursor, wire);
  } else {
    if (dev.os() != Os::android) throw Error(Errc::routing, "adb backends need an android device");
    dispatch_adb(cmd, dev, backend, wire);
  }
  return report;
}

}  // namespace pb::automation
