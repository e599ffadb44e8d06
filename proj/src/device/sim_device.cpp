#include "pb/device/sim_device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pb/automation/adb.hpp"
#include "pb/common/error.hpp"
#include "pb/common/random.hpp"

namespace pb::device {

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
constexpr std::size_t kScratchTicks = 1 << 16;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json kind_json(AppKind k) {
  switch (k) {
    case AppKind::browser: return "browser";
    case AppKind::video: return "video";
    case AppKind::generic: break;
  }
  return "generic";
}

}  // namespace

void to_json(nlohmann::json& j, const WorkloadEvent& e) {
  j = {{"t", e.t}};
  std::visit(overloaded{
                 [&](const workload::SetBrightness& a) { j["brightness"] = a.level; },
                 [&](const workload::Launch& a) { j["launch"] = a.app; },
                 [&](const workload::PlayVideo& a) { j["video"] = a.on; },
                 [&](const workload::SetCpu& a) { j["cpu"] = a.load ? nlohmann::json(*a.load) : nlohmann::json(); },
                 [&](const workload::Navigate& a) { j["navigate"] = a.url; },
                 [&](const workload::Input& a) { j["input"] = a.command; },
             },
             e.action);
}

void from_json(const nlohmann::json& j, WorkloadEvent& e) {
  e.t = j.at("t").get<double>();
  if (e.t < 0) throw Error(Errc::validation, "workload event time must be >= 0");
  if (j.contains("brightness")) {
    e.action = workload::SetBrightness{j["brightness"].get<int>()};
  } else if (j.contains("launch")) {
    e.action = workload::Launch{j["launch"].get<std::string>()};
  } else if (j.contains("video")) {
    e.action = workload::PlayVideo{j["video"].get<bool>()};
  } else if (j.contains("cpu")) {
    const auto& c = j["cpu"];
    e.action = workload::SetCpu{c.is_null() ? std::nullopt : std::optional<double>(c.get<double>())};
  } else if (j.contains("navigate")) {
    e.action = workload::Navigate{j["navigate"].get<std::string>()};
  } else if (j.contains("input")) {
    e.action = workload::Input{j["input"].get<automation::InputCommand>()};
  } else {
    throw Error(Errc::validation, "workload event has no action: " + j.dump());
  }
}

SimDevice::SimDevice(DeviceId id, DeviceProfile profile, std::uint64_t seed, double sample_rate)
    : id_(std::move(id)), profile_(std::move(profile)), seed_(seed), rate_(sample_rate), network_(local_network()) {
  if (rate_ <= 0) throw Error(Errc::validation, "sample rate must be > 0");
  profile_.model.validate();
  if (profile_.report_cadence_s) cadence_ticks_ = std::max<std::uint64_t>(1, ticks_for(*profile_.report_cadence_s));
  rebuild_home();
}

std::uint64_t SimDevice::ticks_for(double seconds) const noexcept {
  if (seconds <= 0) return 0;
  return static_cast<std::uint64_t>(std::llround(seconds * rate_));
}

double SimDevice::voltage() const noexcept {
  return state_.power_source == PowerSource::monitor ? state_.rail_voltage : profile_.model.supply_voltage;
}

// --- clock -------------------------------------------------------------------

void SimDevice::advance(std::uint64_t ticks, std::span<double> sink) {
  if (!sink.empty() && sink.size() != ticks) throw Error(Errc::validation, "sink size must equal tick count");
  apply_due_events();
  std::uint64_t done = 0;
  while (done < ticks) {
    std::uint64_t n = std::min(ticks - done, next_boundary() - tick_);
    std::span<double> out;
    if (sink.empty()) {
      n = std::min<std::uint64_t>(n, kScratchTicks);
      scratch_.resize(n);
      out = scratch_;
    } else {
      out = sink.subspan(done, n);
    }
    trace::kernels::synthesize_current(out, mean_current_ma(), profile_.model.noise_ma, seed_, tick_);
    const double sum_ma = trace::kernels::compensated_sum(out);
    energy_.add(sum_ma / 1000.0 * voltage() / rate_);
    if (cadence_ticks_) window_sum_.add(sum_ma);
    if (auto seg = load_segment()) {
      const double mbps = std::min(load_->profile.segments[*seg].bandwidth_mbps, network_.download_mbps);
      rx_bytes_ += mbps * 1e6 / 8.0 * static_cast<double>(n) / rate_;
    }
    tick_ += n;
    done += n;
    close_window_if_due();
    if (load_ && !page_loading() && tick_ >= load_->start_tick) load_.reset();
    apply_due_events();
  }
}

trace::PowerSample SimDevice::step(double dt) {
  if (dt <= 0) throw Error(Errc::validation, "dt must be > 0");
  const double t0 = now();
  const std::uint64_t n = std::max<std::uint64_t>(1, ticks_for(dt));
  std::vector<double> buf(n);
  advance(n, buf);
  // mean of offsets from the first sample, exact for a constant stretch
  const double first = buf.front();
  for (auto& v : buf) v -= first;
  return {t0, first + trace::kernels::compensated_sum(buf) / static_cast<double>(n)};
}

std::uint64_t SimDevice::next_boundary() const {
  std::uint64_t b = kNever;
  if (!events_.empty()) b = std::min(b, std::max(events_.front().first, tick_ + 1));
  if (bump_until_ > tick_) b = std::min(b, bump_until_);
  if (cadence_ticks_) b = std::min(b, window_start_ + cadence_ticks_);
  if (load_) {
    if (tick_ < load_->start_tick) {
      b = std::min(b, load_->start_tick);
    } else {
      double cum = 0.0;
      for (const auto& s : load_->profile.segments) {
        cum += s.duration_s;
        const auto end = load_->start_tick + ticks_for(cum);
        if (end > tick_) {
          b = std::min(b, end);
          break;
        }
      }
    }
  }
  return b;
}

std::optional<std::size_t> SimDevice::load_segment() const {
  if (!load_ || tick_ < load_->start_tick) return std::nullopt;
  double cum = 0.0;
  for (std::size_t i = 0; i < load_->profile.segments.size(); ++i) {
    cum += load_->profile.segments[i].duration_s;
    if (load_->start_tick + ticks_for(cum) > tick_) return i;
  }
  return std::nullopt;
}

bool SimDevice::page_loading() const noexcept {
  if (!load_) return false;
  return tick_ < load_->start_tick || load_segment().has_value();
}

void SimDevice::close_window_if_due() {
  if (!cadence_ticks_ || tick_ - window_start_ < cadence_ticks_) return;
  last_reading_ = BatteryReading{now(), static_cast<double>(window_start_) / rate_,
                                 window_sum_.value() / static_cast<double>(tick_ - window_start_), voltage()};
  window_start_ = tick_;
  window_sum_ = {};
}

// --- load model ----------------------------------------------------------------

double SimDevice::workload_cpu() const {
  if (cpu_override_) return std::clamp(*cpu_override_, 0.0, 1.0);
  if (auto seg = load_segment()) return load_->profile.segments[*seg].cpu;
  if (state_.foreground == kHome) return profile_.idle_cpu;
  const auto& app = state_.apps.at(state_.foreground);
  if (app.kind == AppKind::video && state_.video_playing) return profile_.video_cpu;
  return profile_.browser_idle_cpu;
}

double SimDevice::cpu_load() const {
  const double bump = tick_ < bump_until_ ? profile_.input_bump_cpu : 0.0;
  return std::clamp(workload_cpu() + bump, 0.0, 1.0);
}

PowerInputs SimDevice::power_inputs() const {
  return {state_.brightness, cpu_load(), state_.mirroring, state_.wifi, state_.bluetooth};
}

void SimDevice::bump() { bump_until_ = std::max(bump_until_, tick_ + ticks_for(profile_.input_bump_s)); }

// --- workloads -------------------------------------------------------------------

void SimDevice::load_workload(std::vector<WorkloadEvent> events) {
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (auto& e : events) {
    const auto at = tick_ + ticks_for(e.t);
    auto pos = std::upper_bound(events_.begin(), events_.end(), at,
                                [](std::uint64_t t, const auto& ev) { return t < ev.first; });
    events_.insert(pos, {at, std::move(e.action)});
  }
  apply_due_events();
}

void SimDevice::apply_due_events() {
  while (!events_.empty() && events_.front().first <= tick_) {
    auto action = std::move(events_.front().second);
    events_.pop_front();
    apply_event(action);
  }
}

void SimDevice::apply_event(const WorkloadAction& action) {
  std::visit(overloaded{
                 [&](const workload::SetBrightness& a) { set_brightness(a.level); },
                 [&](const workload::Launch& a) { launch(a.app); },
                 [&](const workload::PlayVideo& a) { state_.video_playing = a.on; },
                 [&](const workload::SetCpu& a) { cpu_override_ = a.load; },
                 [&](const workload::Navigate& a) { navigate(a.url); },
                 [&](const workload::Input& a) { apply_input(a.command); },
             },
             action);
}

// --- input ---------------------------------------------------------------------

const Scene& SimDevice::active_scene() const {
  if (state_.foreground == kHome) return home_;
  return scenes_.at(state_.foreground);
}

std::string SimDevice::field_key(const std::string& field) const { return active_scene().id + "/" + field; }

void SimDevice::check_bounds(Point p) const {
  if (!profile_.screen.contains(p.x, p.y)) {
    throw Error(Errc::bounds, "point (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside " +
                                  std::to_string(profile_.screen.width) + "x" + std::to_string(profile_.screen.height));
  }
}

StateDelta SimDevice::apply_input(const automation::InputCommand& cmd) {
  automation::validate(cmd);
  return std::visit(overloaded{
                        [&](const automation::Tap& c) {
                          check_bounds({c.x, c.y});
                          return touch({c.x, c.y}, {c.x, c.y});
                        },
                        [&](const automation::Swipe& c) {
                          check_bounds({c.x1, c.y1});
                          check_bounds({c.x2, c.y2});
                          return touch({c.x1, c.y1}, {c.x2, c.y2});
                        },
                        [&](const automation::Text& c) {
                          StateDelta d;
                          for (char ch : c.text) {
                            auto part = type_char(ch);
                            d.changes.insert(d.changes.end(), part.changes.begin(), part.changes.end());
                          }
                          return d;
                        },
                        [&](const automation::Key& c) { return press_key(c.key); },
                        [&](const automation::LaunchApp& c) { return launch(c.app_id); },
                        [&](const automation::Wait&) { return StateDelta{}; },
                    },
                    cmd);
}

StateDelta SimDevice::touch(Point down, Point up) {
  bump();
  const int dx = up.x - down.x;
  const int dy = up.y - down.y;
  if (dx * dx + dy * dy <= kTapSlopPx * kTapSlopPx) return tap(down);
  return swipe(down, up);
}

StateDelta SimDevice::tap(Point p) {
  StateDelta d;
  const Scene& scene = active_scene();
  const Target* t = scene.hit(p);
  if (state_.foreground != kHome) {
    auto& app = state_.apps.at(state_.foreground);
    if (app.onboarding_pending) {
      if (t && t->action == TargetAction::dismiss_onboarding) {
        app.onboarding_pending = false;
        d.changes.push_back("onboarding:" + app.id + "=done");
      }
      return d;
    }
  }
  if (!t) return d;
  switch (t->action) {
    case TargetAction::launch_app: return launch(t->arg);
    case TargetAction::focus_field:
      state_.focus[scene.id] = t->id;
      d.changes.push_back("focus:" + scene.id + "=" + t->id);
      // an address bar selects its contents on focus, so typing replaces them
      if (t->arg == "url") state_.fields.erase(field_key(t->id));
      break;
    case TargetAction::play_video:
      state_.video_playing = true;
      d.changes.push_back("video=playing");
      break;
    case TargetAction::navigate:
      navigate(t->arg);
      d.changes.push_back("url=" + t->arg);
      break;
    case TargetAction::dismiss_onboarding:
    case TargetAction::none: break;
  }
  return d;
}

StateDelta SimDevice::swipe(Point down, Point up) {
  StateDelta d;
  if (state_.foreground != kHome && state_.apps.at(state_.foreground).onboarding_pending) return d;
  const Scene& scene = active_scene();
  const ScrollRegion* r = scene.region_at(down);
  if (!r) return d;
  auto& offset = state_.scroll[scene.id + "/" + r->id];
  const int next = std::clamp(offset + (down.y - up.y), 0, r->max_offset());
  if (next != offset) {
    d.changes.push_back("scroll:" + scene.id + "/" + r->id + "=" + std::to_string(next));
    offset = next;
  }
  return d;
}

StateDelta SimDevice::type_char(char c) {
  if (c == '\n') return press_key(automation::NamedKey::enter);
  if (c == '\t') return press_key(automation::NamedKey::tab);
  bump();
  StateDelta d;
  if (state_.foreground != kHome && state_.apps.at(state_.foreground).onboarding_pending) return d;
  const Scene& scene = active_scene();
  auto it = state_.focus.find(scene.id);
  if (it == state_.focus.end() || it->second.empty()) return d;
  auto& text = state_.fields[field_key(it->second)];
  text += c;
  d.changes.push_back("field:" + field_key(it->second) + "=" + text);
  return d;
}

StateDelta SimDevice::press_key(automation::NamedKey key) {
  using automation::NamedKey;
  bump();
  StateDelta d;
  const Scene& scene = active_scene();
  const auto focus = state_.focus.count(scene.id) ? state_.focus.at(scene.id) : std::string{};
  const bool pending = state_.foreground != kHome && state_.apps.at(state_.foreground).onboarding_pending;
  switch (key) {
    case NamedKey::back:
    case NamedKey::home:
      if (state_.foreground != kHome) {
        go_home();
        d.changes.push_back("foreground=home");
      }
      break;
    case NamedKey::backspace:
      if (!focus.empty() && !pending) {
        auto& text = state_.fields[field_key(focus)];
        if (!text.empty()) {
          text.pop_back();
          d.changes.push_back("field:" + field_key(focus) + "=" + text);
        }
      }
      break;
    case NamedKey::tab: {
      if (pending) break;
      std::vector<const Target*> fields;
      for (const auto& t : scene.targets) {
        if (t.action == TargetAction::focus_field) fields.push_back(&t);
      }
      if (fields.empty()) break;
      std::size_t next = 0;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i]->id == focus) next = (i + 1) % fields.size();
      }
      state_.focus[scene.id] = fields[next]->id;
      d.changes.push_back("focus:" + scene.id + "=" + fields[next]->id);
      break;
    }
    case NamedKey::enter: {
      if (focus.empty() || pending) break;
      const Target* t = scene.find_id(focus);
      const auto& app = state_.apps.at(state_.foreground);
      if (t && t->arg == "url" && app.kind == AppKind::browser) {
        const auto url = state_.fields[field_key(focus)];
        if (!url.empty()) {
          navigate(url);
          d.changes.push_back("url=" + url);
        }
      }
      break;
    }
  }
  return d;
}

StateDelta SimDevice::launch(const AppId& app) {
  auto it = state_.apps.find(app);
  if (it == state_.apps.end()) throw Error(Errc::not_found, "app '" + app + "' is not installed");
  StateDelta d;
  it->second.last_used = now();
  if (state_.foreground == app) return d;
  if (state_.foreground != kHome) {
    if (state_.apps.at(state_.foreground).kind == AppKind::video) state_.video_playing = false;
    state_.background.insert(state_.foreground);
  }
  const bool fresh = state_.background.erase(app) == 0;
  state_.foreground = app;
  if (fresh) {
    const auto prefix = app + "/";
    std::erase_if(state_.fields, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
    std::erase_if(state_.scroll, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
    state_.focus[app] = scenes_.at(app).initial_focus;
    if (it->second.kind == AppKind::browser) {
      state_.url.clear();
      load_.reset();
    }
    if (it->second.kind == AppKind::video) state_.video_playing = false;
  }
  d.changes.push_back("foreground=" + app);
  return d;
}

void SimDevice::navigate(const std::string& url) {
  state_.url = url;
  if (state_.foreground != kHome) {
    const auto prefix = state_.foreground + "/";
    std::erase_if(state_.scroll, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
  }
  ++state_.page_loads;
  std::optional<PageLoadProfile> profile =
      resolver_ ? resolver_(url) : std::optional<PageLoadProfile>(synthetic_page_profile(url, seed_));
  load_.reset();
  if (!profile || profile->segments.empty()) return;
  load_ = ActiveLoad{std::move(*profile), tick_ + ticks_for(network_.latency_ms / 1000.0)};
}

StateDelta SimDevice::hid_mouse(const automation::HidMouseReport& r) {
  r.validate();
  pointer_.x = std::clamp(pointer_.x + r.dx, 0, profile_.screen.width - 1);
  pointer_.y = std::clamp(pointer_.y + r.dy, 0, profile_.screen.height - 1);
  const bool was_down = buttons_ & automation::kLeftButton;
  const bool is_down = r.buttons & automation::kLeftButton;
  buttons_ = r.buttons;
  if (!was_down && is_down) press_point_ = pointer_;
  if (was_down && !is_down) return touch(press_point_, pointer_);
  return {};
}

StateDelta SimDevice::pointer_event(Point p, bool pressed) {
  check_bounds(p);
  pointer_ = p;
  const bool was_down = buttons_ & automation::kLeftButton;
  buttons_ = pressed ? automation::kLeftButton : 0;
  if (!was_down && pressed) press_point_ = p;
  if (was_down && !pressed) return touch(press_point_, p);
  return {};
}

StateDelta SimDevice::key_event(const std::string& key) {
  if (key.size() == 1) return type_char(key[0]);
  return press_key(automation::named_key_from_string(key));
}

StateDelta SimDevice::hid_keyboard(const automation::HidKeyboardReport& r) {
  r.validate();
  StateDelta d;
  const bool shift = r.modifiers & (automation::kLeftShift | 0x20);
  for (auto k : r.keys) {
    if (k == 0 || std::find(last_keys_.keys.begin(), last_keys_.keys.end(), k) != last_keys_.keys.end()) continue;
    StateDelta part;
    if (auto c = automation::char_for({k, shift})) {
      part = type_char(*c);
    } else if (auto key = automation::named_key_for(k)) {
      part = press_key(*key);
    }
    d.changes.insert(d.changes.end(), part.changes.begin(), part.changes.end());
  }
  last_keys_ = r;
  return d;
}

AdbResult SimDevice::adb_shell(std::string_view line) {
  if (profile_.os != Os::android) throw Error(Errc::unavailable, "device has no adb daemon");
  std::vector<std::string> w;
  try {
    w = automation::shell_split(line);
  } catch (const Error& e) {
    return {2, e.what()};
  }
  if (w.empty()) return {0, ""};
  auto arg = [&](std::size_t i) -> const std::string& {
    static const std::string empty;
    return i < w.size() ? w[i] : empty;
  };
  try {
    if (w[0] == "input" || w[0] == "monkey") {
      const auto cmd = automation::parse_adb_input(line);
      const auto delta = apply_input(cmd);
      std::string out;
      for (const auto& c : delta.changes) out += c + "\n";
      if (std::holds_alternative<automation::LaunchApp>(cmd)) out += "Events injected: 1\n";
      return {0, out};
    }
    if (w[0] == "am" && arg(1) == "force-stop" && w.size() == 3) {
      if (installed(w[2])) force_stop(w[2]);
      return {0, ""};
    }
    if (w[0] == "pm" && arg(1) == "clear" && w.size() == 3) {
      if (!installed(w[2])) return {1, "Failed"};
      clear_app_data(w[2]);
      return {0, "Success"};
    }
    if (w[0] == "pm" && arg(1) == "uninstall" && w.size() == 3) {
      if (!installed(w[2])) return {1, "Failure [DELETE_FAILED_INTERNAL_ERROR]"};
      uninstall_app(w[2]);
      return {0, "Success"};
    }
    if (w[0] == "pm" && arg(1) == "list" && arg(2) == "packages") {
      std::string out;
      for (const auto& [id, _] : state_.apps) out += "package:" + id + "\n";
      return {0, out};
    }
    if (w[0] == "settings" && arg(1) == "put" && w.size() == 5) {
      const int v = std::stoi(w[4]);
      if (w[3] == "screen_brightness") {
        set_brightness(v);
      } else if (w[3] == "screen_brightness_mode") {
        set_auto_brightness(v != 0);
      } else if (w[3] == "airplane_mode_on") {
        set_airplane(v != 0);
      } else {
        return {1, "unknown setting " + w[3]};
      }
      return {0, ""};
    }
    if (w[0] == "dumpsys" && arg(1) == "battery") {
      std::string out = "Current Battery Service state:\n";
      out += "  voltage: " + std::to_string(static_cast<int>(std::lround(voltage() * 1000))) + "\n";
      if (last_reading_) out += "  current now: " + std::to_string(std::lround(last_reading_->current_ma)) + "\n";
      return {0, out};
    }
  } catch (const Error& e) {
    return {1, e.what()};
  } catch (const std::exception& e) {
    return {1, e.what()};
  }
  return {127, "/system/bin/sh: " + w[0] + ": inaccessible or not found"};
}

// --- settings -------------------------------------------------------------------

void SimDevice::set_brightness(int level) {
  if (level < 0 || level > kMaxBrightness) throw Error(Errc::range, "brightness must be within [0, 250]");
  state_.brightness = level;
}

void SimDevice::set_auto_brightness(bool on) { state_.auto_brightness = on; }

void SimDevice::set_airplane(bool on) {
  state_.airplane = on;
  if (on) {
    state_.wifi = WifiBand::off;
    state_.mobile_data = false;
  } else {
    state_.mobile_data = profile_.has_cellular;
  }
}

void SimDevice::set_wifi(WifiBand band) {
  if (band == WifiBand::ghz_5 && !profile_.supports_5ghz) {
    throw Error(Errc::validation, profile_.name + " does not support 5GHz");
  }
  state_.wifi = band;
}

void SimDevice::set_bluetooth(bool on) { state_.bluetooth = on; }

void SimDevice::set_mobile_data(bool on) {
  if (on && !profile_.has_cellular) throw Error(Errc::unavailable, "no cellular radio");
  state_.mobile_data = on;
}

void SimDevice::set_notifications(bool on) { state_.notifications = on; }

void SimDevice::set_mirroring(bool on) {
  if (on && !state_.mirroring) {
    tokens_ = 0.0;
    token_tick_ = tick_;
  }
  state_.mirroring = on;
}

void SimDevice::set_power_source(PowerSource source, double rail_voltage) {
  // A monitor rail below the device's shutdown voltage is a power gap.
  if (source == PowerSource::monitor && rail_voltage < 3.0) ++brownouts_;
  state_.power_source = source;
  state_.rail_voltage = source == PowerSource::monitor ? rail_voltage : 0.0;
}

void SimDevice::go_home() {
  if (state_.foreground == kHome) return;
  if (state_.apps.at(state_.foreground).kind == AppKind::video) state_.video_playing = false;
  state_.background.insert(state_.foreground);
  state_.foreground = std::string(kHome);
}

void SimDevice::close_background_apps() { state_.background.clear(); }

void SimDevice::install_app(AppRecord app, std::optional<Scene> scene) {
  if (app.id.empty() || app.id == kHome) throw Error(Errc::validation, "invalid app id");
  if (!scene) {
    switch (app.kind) {
      case AppKind::browser: scene = browser_scene(profile_.screen, app.id); break;
      case AppKind::video: scene = video_scene(profile_.screen, app.id); break;
      case AppKind::generic: scene = generic_scene(profile_.screen, app.id); break;
    }
  }
  scene->id = app.id;
  validate(*scene, profile_.screen);
  if (app.kind == AppKind::browser && !state_.apps.count(app.id)) app.onboarding_pending = true;
  scenes_[app.id] = std::move(*scene);
  state_.apps[app.id] = std::move(app);
  rebuild_home();
}

void SimDevice::uninstall_app(const AppId& app) {
  if (!state_.apps.count(app)) throw Error(Errc::not_found, "app '" + app + "' is not installed");
  force_stop(app);
  state_.apps.erase(app);
  scenes_.erase(app);
  state_.focus.erase(app);
  const auto prefix = app + "/";
  std::erase_if(state_.fields, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
  std::erase_if(state_.scroll, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
  rebuild_home();
}

void SimDevice::clear_app_data(const AppId& app) {
  auto it = state_.apps.find(app);
  if (it == state_.apps.end()) throw Error(Errc::not_found, "app '" + app + "' is not installed");
  force_stop(app);
  const auto prefix = app + "/";
  std::erase_if(state_.fields, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
  std::erase_if(state_.scroll, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
  state_.focus.erase(app);
  it->second.onboarding_pending = it->second.kind == AppKind::browser;
}

void SimDevice::force_stop(const AppId& app) {
  auto it = state_.apps.find(app);
  if (it == state_.apps.end()) return;
  state_.background.erase(app);
  if (state_.foreground == app) {
    if (it->second.kind == AppKind::video) state_.video_playing = false;
    state_.foreground = std::string(kHome);
  }
  if (it->second.kind == AppKind::browser) {
    state_.url.clear();
    load_.reset();
  }
}

std::vector<AppId> SimDevice::uninstall_unused(double max_idle_s) {
  std::vector<AppId> removed;
  for (const auto& [id, app] : state_.apps) {
    if (!app.system && now() - app.last_used >= max_idle_s) removed.push_back(id);
  }
  for (const auto& id : removed) uninstall_app(id);
  return removed;
}

void SimDevice::set_home_scene(Scene scene) {
  scene.id = std::string(kHome);
  validate(scene, profile_.screen);
  home_ = std::move(scene);
  custom_home_ = true;
}

void SimDevice::rebuild_home() {
  if (custom_home_) return;
  std::vector<AppId> ids;
  for (const auto& [id, app] : state_.apps) {
    if (!app.system) ids.push_back(id);
  }
  home_ = home_scene(profile_.screen, ids);
}

// --- mirroring -------------------------------------------------------------------

Frame SimDevice::render_frame() {
  if (!state_.mirroring) throw Error(Errc::unavailable, "mirroring is off");
  const double per_second = bitrate_ / 8.0;
  tokens_ = std::min(per_second, tokens_ + static_cast<double>(tick_ - token_tick_) / rate_ * per_second);
  token_tick_ = tick_;

  Frame f;
  f.seq = ++frame_seq_;
  f.t = now();
  f.size = profile_.screen;
  std::uint64_t hash = fnv1a(observable_state().dump());
  if (state_.video_playing) hash = fnv1a(std::to_string(static_cast<long long>(now() * 30)), hash);
  if (page_loading()) hash = fnv1a(std::to_string(static_cast<long long>(now() * 10)), hash);
  f.content_hash = hash;

  const Scene& scene = active_scene();
  const int cw = profile_.screen.width / 8;
  const int ch = profile_.screen.height / 8;
  const int base = 20 + state_.brightness * 200 / kMaxBrightness;
  int shift = 0;
  for (const auto& [key, off] : state_.scroll) {
    if (key.rfind(scene.id + "/", 0) == 0) shift += off / std::max(1, ch);
  }
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const Point centre{c * cw + cw / 2, r * ch + ch / 2};
      int v = base + (((r + shift) % 2) ? 8 : 0);
      if (scene.hit(centre)) v += 30;
      f.cells[static_cast<std::size_t>(r * 8 + c)] = static_cast<std::uint8_t>(std::min(v, 255));
    }
  }

  const bool changed = f.seq == 1 || hash != last_hash_;
  last_hash_ = hash;
  const double wanted = changed ? static_cast<double>(profile_.screen.width) * profile_.screen.height / 8.0 : 256.0;
  const auto sent = static_cast<std::size_t>(std::floor(std::min(wanted, tokens_)));
  tokens_ -= static_cast<double>(sent);
  stream_bytes_ += sent;
  f.encoded_bytes = sent;
  return f;
}

nlohmann::json SimDevice::observable_state() const {
  nlohmann::json apps = nlohmann::json::object();
  for (const auto& [id, app] : state_.apps) {
    apps[id] = {{"kind", kind_json(app.kind)}, {"onboarding_pending", app.onboarding_pending}};
  }
  return {{"brightness", state_.brightness},
          {"auto_brightness", state_.auto_brightness},
          {"airplane", state_.airplane},
          {"wifi", state_.wifi},
          {"bluetooth", state_.bluetooth},
          {"mobile_data", state_.mobile_data},
          {"notifications", state_.notifications},
          {"mirroring", state_.mirroring},
          {"foreground", state_.foreground},
          {"background", state_.background},
          {"apps", apps},
          {"fields", state_.fields},
          {"scroll", state_.scroll},
          {"focus", state_.focus},
          {"url", state_.url},
          {"page_loads", state_.page_loads},
          {"video_playing", state_.video_playing}};
}

}  // namespace pb::device
