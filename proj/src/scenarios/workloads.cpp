#include "pb/scenarios/workloads.hpp"

#include <algorithm>
#include <random>

#include "pb/common/error.hpp"
#include "pb/common/random.hpp"
#include "pb/device/device_config.hpp"
#include "pb/replay/replayer.hpp"
#include "pb/trace/analysis.hpp"

namespace pb::scenarios {

namespace {

constexpr const char* kDevice = "d1";

using replay::EventKind;
using replay::RecordedEvent;

// Builds the event list of one session on the console view.
class SessionWriter {
 public:
  SessionWriter(ScreenSize device, ScreenSize view, std::uint64_t seed) : device_(device), view_(view), rng_(seed) {}

  std::int64_t t = 0;

  int jitter(int lo, int hi) { return uniform_int(rng_, lo, hi); }

  Point to_view(Point p) const {
    return {static_cast<int>(static_cast<std::int64_t>(p.x) * view_.width / device_.width),
            static_cast<int>(static_cast<std::int64_t>(p.y) * view_.height / device_.height)};
  }

  void mouse(EventKind kind, Point p) {
    RecordedEvent e;
    e.t_ms = t;
    e.kind = kind;
    e.position = {std::clamp(p.x, 0, view_.width), std::clamp(p.y, 0, view_.height)};
    e.view = view_;
    events.push_back(e);
  }

  void key(EventKind kind, std::string k) {
    RecordedEvent e;
    e.t_ms = t;
    e.kind = kind;
    e.key = std::move(k);
    events.push_back(e);
  }

  void tap(Point view_point) {
    mouse(EventKind::mouse_down, view_point);
    t += jitter(60, 120);
    mouse(EventKind::mouse_up, {view_point.x + jitter(-2, 2), view_point.y + jitter(-2, 2)});
  }

  void press(const std::string& k) {
    key(EventKind::key_down, k);
    t += jitter(40, 90);
    key(EventKind::key_up, k);
  }

  void type(const std::string& text) {
    for (char c : text) {
      press(std::string(1, c));
      t += jitter(80, 170);
    }
  }

  // finger travels dy view pixels over the page
  void drag(Point from, int dy, int duration_ms) {
    mouse(EventKind::mouse_down, from);
    const int steps = 4;
    for (int i = 1; i < steps; ++i) {
      t += duration_ms / steps;
      mouse(EventKind::mouse_move, {from.x, from.y + dy * i / steps});
    }
    t += duration_ms - (steps - 1) * (duration_ms / steps);
    mouse(EventKind::mouse_up, {from.x, from.y + dy});
  }

  std::vector<RecordedEvent> events;

 private:
  ScreenSize device_;
  ScreenSize view_;
  std::mt19937_64 rng_;
};

double trace_energy(const trace::PowerTrace& t) { return trace::energy(t); }

MeasuredRun measured(std::shared_ptr<const trace::PowerTrace> t) {
  MeasuredRun r;
  r.energy_j = trace_energy(*t);
  r.duration_s = t->duration();
  r.trace = std::move(t);
  return r;
}

device::DeviceProfile resolve(const UsabilityOptions& o) {
  return o.profile_override ? *o.profile_override : device::find_profile(o.profile);
}

void open_browser(controller::Controller& ctl) {
  ctl.execute_command(kDevice, automation::LaunchApp{device::kBraveBrowser});
  const auto& scene = ctl.device(kDevice).active_scene();
  if (ctl.device(kDevice).state().apps.at(device::kBraveBrowser).onboarding_pending) {
    const auto p = scene.find(device::TargetAction::dismiss_onboarding)->rect.center();
    ctl.execute_command(kDevice, automation::Tap{p.x, p.y});
  }
  ctl.advance(1.0);
}

double median_of(std::span<const double> v) {
  std::vector<double> c(v.begin(), v.end());
  const auto mid = c.begin() + static_cast<std::ptrdiff_t>(c.size() / 2);
  std::nth_element(c.begin(), mid, c.end());
  return *mid;
}

}  // namespace

const std::vector<std::string>& news_sites() {
  static const std::vector<std::string> sites{"cnn.com",      "bbc.com",          "nytimes.com", "theguardian.com",
                                              "foxnews.com",  "washingtonpost.com", "reuters.com", "aljazeera.com",
                                              "usatoday.com", "npr.org"};
  return sites;
}

replay::RecordingSession news_session(const DeviceId& device, ScreenSize device_size,
                                      const NewsSessionOptions& options) {
  SessionWriter w(device_size, options.view, options.seed);
  const auto url = w.to_view(device::url_bar_rect(device_size).center());
  const auto page = device::page_rect(device_size);
  const Point page_mid = w.to_view(page.center());
  const int travel = options.view.height * 3 / 10;
  const auto per_site = static_cast<std::int64_t>(options.per_site_s * 1000);

  w.mouse(EventKind::mouse_move, page_mid);
  for (std::size_t i = 0; i < news_sites().size(); ++i) {
    const std::int64_t start = static_cast<std::int64_t>(i) * per_site;
    const std::int64_t deadline = start + per_site - 1500;
    w.t = start + w.jitter(600, 1400);
    w.tap({url.x + w.jitter(-20, 20), url.y + w.jitter(-3, 3)});
    w.t += w.jitter(300, 700);
    w.type(news_sites()[i]);
    w.t += w.jitter(150, 400);
    w.press("Enter");
    w.t += 6000 + w.jitter(0, 800);  // page load
    for (int s = 0; s < 5; ++s) {
      const int dur = w.jitter(250, 450);
      if (w.t + dur > deadline) break;
      const bool down = s < 3;
      const Point from{page_mid.x + w.jitter(-30, 30), page_mid.y + (down ? travel / 2 : -travel / 2)};
      w.drag(from, down ? -travel : travel, dur);
      w.t += w.jitter(1800, 3600);
    }
  }
  w.t = static_cast<std::int64_t>(news_sites().size()) * per_site;
  w.mouse(EventKind::mouse_move, page_mid);

  replay::RecordingSession s;
  s.session_id = "news";
  s.device_id = device;
  s.device_size = device_size;
  s.events = std::move(w.events);
  s.open = false;
  return s;
}

MeasuredRun run_live_session(controller::Controller& ctl, const replay::RecordingSession& session) {
  const auto& id = session.device_id;
  auto& dev = ctl.device(id);
  ctl.device_mirroring(id, true);
  ctl.start_monitor(id, 0);
  if (!session.events.empty()) {
    const double t0 = ctl.now();
    const auto first = session.events.front().t_ms;
    bool pressed = false;
    for (const auto& e : session.events) {
      const double due = t0 + static_cast<double>(e.t_ms - first) / 1000.0;
      if (ctl.now() < due) ctl.advance(due - ctl.now());
      switch (e.kind) {
        case EventKind::mouse_down:
        case EventKind::mouse_up:
        case EventKind::mouse_move:
          if (e.kind == EventKind::mouse_down) pressed = true;
          if (e.kind == EventKind::mouse_up) pressed = false;
          dev.pointer_event(replay::map_coords(e.position, e.view, session.device_size), pressed);
          break;
        case EventKind::key_down: dev.key_event(e.key); break;
        case EventKind::key_up: break;
      }
    }
  }
  return measured(ctl.stop_monitor());
}

std::unique_ptr<controller::Controller> prepared_node(const device::DeviceProfile& profile, std::uint64_t seed,
                                                      std::optional<double> noise_ma, bool visual) {
  auto ctl = std::make_unique<controller::Controller>("node1");
  device::DeviceConfig cfg;
  cfg.device_id = kDevice;
  cfg.profile = profile.name;
  cfg.seed = seed;
  cfg.noise_ma = noise_ma;
  cfg.apps = device::standard_apps();
  ctl->add_device(device::build_device(cfg, profile));
  ctl->node_setup(kDevice, true, visual);
  ctl->device_setup(kDevice);
  return ctl;
}

UsabilityStudy run_usability_study(const UsabilityOptions& options) {
  const auto profile = resolve(options);
  UsabilityStudy study;
  const auto session = news_session(kDevice, profile.screen, options.session);

  auto live = prepared_node(profile, options.device_seed, options.noise_ma, true);
  open_browser(*live);
  study.recorded = run_live_session(*live, session);
  study.recorded_state = live->device(kDevice).observable_state();

  auto compiled = replay::compile(session);
  study.script = compiled.script;
  study.warnings = compiled.warnings;

  auto bot = prepared_node(profile, options.device_seed, options.noise_ma, false);
  open_browser(*bot);
  replay::ReplayOptions ro;
  ro.measure = true;
  const auto r = replay::replay_script(*bot, study.script, ro);
  study.replay_ok = r.ok;
  study.replayed = measured(bot->find_trace(*r.trace_id));
  study.replayed_state = bot->device(kDevice).observable_state();
  return study;
}

MeasuredRun idle_run(const device::DeviceProfile& profile, double seconds, std::uint64_t seed,
                     std::optional<double> noise_ma) {
  auto ctl = prepared_node(profile, seed, noise_ma);
  ctl->start_monitor(kDevice, seconds);
  ctl->advance(seconds);
  return measured(ctl->stop_monitor());
}

VideoMedians video_medians(const device::DeviceProfile& profile, double seconds_each, std::uint64_t seed) {
  auto ctl = prepared_node(profile, seed);
  ctl->execute_command(kDevice, automation::LaunchApp{device::kVideoPlayer});
  const auto play = ctl->device(kDevice).active_scene().find(device::TargetAction::play_video)->rect.center();
  ctl->execute_command(kDevice, automation::Tap{play.x, play.y});
  if (!ctl->device(kDevice).state().video_playing) throw Error(Errc::state, "video did not start");
  ctl->advance(1.0);

  VideoMedians m;
  ctl->start_monitor(kDevice, seconds_each);
  ctl->advance(seconds_each);
  m.off_ma = median_of(ctl->stop_monitor()->currents());
  ctl->device_mirroring(kDevice, true);
  ctl->advance(1.0);
  ctl->start_monitor(kDevice, seconds_each);
  ctl->advance(seconds_each);
  m.on_ma = median_of(ctl->stop_monitor()->currents());
  return m;
}

SweepRun brightness_sweep(const device::DeviceProfile& profile, double step_s, std::uint64_t seed) {
  auto ctl = prepared_node(profile, seed);
  auto& dev = ctl->device(kDevice);
  std::vector<device::WorkloadEvent> steps;
  for (int i = 0; i <= 5; ++i) steps.push_back({step_s * i, device::workload::SetBrightness{50 * i}});
  dev.load_workload(steps);

  SweepRun run;
  const double total = 6 * step_s;
  const double dt = profile.report_cadence_s ? std::min(1.0, *profile.report_cadence_s / 4) : 1.0;
  ctl->start_monitor(kDevice, total);
  const double end = ctl->now() + total;
  while (ctl->now() < end - 1e-9) {
    ctl->advance(std::min(dt, end - ctl->now()));
    auto r = dev.software_battery_reading();
    if (r && (run.readings.empty() || run.readings.back().t != r->t)) run.readings.push_back(*r);
  }
  run.trace = ctl->stop_monitor();
  return run;
}

}  // namespace pb::scenarios
