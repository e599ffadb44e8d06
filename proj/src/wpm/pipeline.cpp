#include "pb/wpm/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "pb/common/error.hpp"
#include "pb/device/scene.hpp"
#include "pb/trace/analysis.hpp"

namespace pb::wpm {

namespace {

using nlohmann::json;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

void browser_setup(controller::Controller& ctl, const DeviceId& id, const AppId& browser) {
  auto& dev = ctl.device(id);
  if (!dev.installed(browser)) {
    dev.install_app(device::AppRecord{browser, device::AppKind::browser, false, dev.now(), dev.now(), true});
  }
  if (dev.state().apps.at(browser).kind != device::AppKind::browser) {
    throw Error(Errc::validation, "'" + browser + "' is not a browser");
  }
  dev.force_stop(browser);
  dev.clear_app_data(browser);
  ctl.execute_command(id, automation::LaunchApp{browser});
  if (dev.state().apps.at(browser).onboarding_pending) {
    const auto* target = dev.active_scene().find(device::TargetAction::dismiss_onboarding);
    if (target == nullptr) throw Error(Errc::state, "onboarding screen without a dismiss target");
    const auto p = target->rect.center();
    ctl.execute_command(id, automation::Tap{p.x, p.y});
  }
  ctl.advance(1.0);
}

// One page load: address bar, URL, Enter, then the budget runs out while
// CPU is sampled and (in interact mode) the page is scrolled.
LoadMetrics load_page(controller::Controller& ctl, const WpmRequest& req, const std::string& url, int rep) {
  auto& dev = ctl.device(req.device_id);
  LoadMetrics m;
  m.rep = rep;
  m.window_start = ctl.now();
  const double end = m.window_start + req.per_page_budget_s;
  const double rx0 = dev.rx_bytes();

  std::vector<double> samples;
  for (int k = 0; m.window_start + k * kCpuSamplePeriodS < end - 1e-9; ++k) {
    samples.push_back(m.window_start + k * kCpuSamplePeriodS);
  }
  std::vector<double> scrolls;
  if (req.automation == Automation::interact) {
    for (int k = 1; k <= kInteractScrolls; ++k) {
      scrolls.push_back(m.window_start + req.per_page_budget_s * k / (kInteractScrolls + 1));
    }
  }

  std::size_t next_sample = 0;
  auto take_due_samples = [&] {
    while (next_sample < samples.size() && samples[next_sample] <= ctl.now() + 1e-9) {
      m.cpu_samples.push_back(dev.effective_cpu());
      ++next_sample;
    }
  };

  take_due_samples();
  try {
    if (dev.state().foreground != req.browser) ctl.execute_command(req.device_id, automation::LaunchApp{req.browser});
    const auto bar = device::url_bar_rect(dev.screen()).center();
    ctl.execute_command(req.device_id, automation::Tap{bar.x, bar.y});
    ctl.execute_command(req.device_id, automation::Text{url});
    ctl.execute_command(req.device_id, automation::Key{automation::NamedKey::enter});
    if (!dev.page_loading()) {
      m.ok = false;
      m.error = "page did not load";
    }
  } catch (const Error& e) {
    m.ok = false;
    m.error = e.what();
  }

  const auto page = device::page_rect(dev.screen());
  const int cx = page.x + page.w / 2;
  const int top = page.y + 1;
  const int bottom = page.y + page.h - 2;
  std::size_t next_scroll = 0;
  while (true) {
    take_due_samples();
    double due = end;
    if (next_sample < samples.size()) due = std::min(due, samples[next_sample]);
    if (m.ok && next_scroll < scrolls.size()) due = std::min(due, scrolls[next_scroll]);
    if (ctl.now() < due - 1e-12) ctl.advance(due - ctl.now());
    take_due_samples();
    if (m.ok && next_scroll < scrolls.size() && scrolls[next_scroll] <= ctl.now() + 1e-9) {
      // even scrolls move the content up (finger bottom to top)
      const bool down = next_scroll % 2 == 0;
      try {
        ctl.execute_command(req.device_id, automation::Swipe{cx, down ? bottom : top, cx, down ? top : bottom, 300});
      } catch (const Error& e) {
        m.ok = false;
        m.error = e.what();
      }
      ++next_scroll;
      continue;
    }
    if (ctl.now() >= end - 1e-9 && next_sample >= samples.size()) break;
  }
  m.window_end = ctl.now();
  m.page_bytes = dev.rx_bytes() - rx0;
  return m;
}

}  // namespace

void WpmRequest::validate() const {
  if (device_id.empty()) throw Error(Errc::validation, "device_id is required");
  if (browser.empty()) throw Error(Errc::validation, "browser is required");
  if (reps < 1) throw Error(Errc::validation, "reps must be at least 1");
  if (!(per_page_budget_s > 0.0)) throw Error(Errc::validation, "per_page_budget_s must be positive");
  if (!(per_page_budget_s <= page_slot_s)) throw Error(Errc::validation, "per_page_budget_s exceeds page_slot_s");
  for (const auto& u : urls) {
    if (u.empty()) throw Error(Errc::validation, "empty url in url list");
  }
}

void to_json(json& j, const WpmRequest& r) {
  j = {{"urls", r.urls},
       {"device_id", r.device_id},
       {"browser", r.browser},
       {"reps", r.reps},
       {"power", r.power},
       {"visual", r.visual},
       {"automation", r.automation},
       {"per_page_budget_s", r.per_page_budget_s},
       {"page_slot_s", r.page_slot_s}};
}

void from_json(const json& j, WpmRequest& r) {
  try {
    r.urls = j.at("urls").get<std::vector<std::string>>();
    r.device_id = j.at("device_id").get<std::string>();
    r.browser = j.at("browser").get<std::string>();
    r.reps = j.value("reps", 3);
    r.power = j.value("power", true);
    r.visual = j.value("visual", false);
    if (j.contains("automation")) {
      const auto a = j["automation"].get<std::string>();
      if (a != "simple_load" && a != "interact") throw Error(Errc::validation, "unknown automation '" + a + "'");
      r.automation = j["automation"].get<Automation>();
    }
    r.per_page_budget_s = j.value("per_page_budget_s", 30.0);
    r.page_slot_s = j.value("page_slot_s", 120.0);
  } catch (const json::exception& e) {
    throw Error(Errc::validation, std::string("bad WPM request: ") + e.what());
  }
}

void to_json(json& j, const LoadMetrics& m) {
  j = {{"rep", m.rep},
       {"ok", m.ok},
       {"error", m.error.empty() ? json(nullptr) : json(m.error)},
       {"window", {m.window_start, m.window_end}},
       {"energy_j", opt(m.energy_j)},
       {"page_bytes", m.page_bytes},
       {"cpu_samples", m.cpu_samples}};
}

void from_json(const json& j, LoadMetrics& m) {
  m.rep = j.at("rep").get<int>();
  m.ok = j.at("ok").get<bool>();
  m.error = j.at("error").is_null() ? std::string{} : j["error"].get<std::string>();
  m.window_start = j.at("window").at(0).get<double>();
  m.window_end = j.at("window").at(1).get<double>();
  m.energy_j = opt_from<double>(j, "energy_j");
  m.page_bytes = j.at("page_bytes").get<double>();
  m.cpu_samples = j.at("cpu_samples").get<std::vector<double>>();
}

void to_json(json& j, const UrlResult& u) {
  j = {{"url", u.url},
       {"failed", u.failed},
       {"successful_reps", u.successful_reps},
       {"median_energy_j", opt(u.median_energy_j)},
       {"median_page_bytes", opt(u.median_page_bytes)},
       {"cpu", opt(u.cpu)},
       {"loads", u.loads}};
}

void from_json(const json& j, UrlResult& u) {
  u.url = j.at("url").get<std::string>();
  u.failed = j.at("failed").get<bool>();
  u.successful_reps = j.at("successful_reps").get<int>();
  u.median_energy_j = opt_from<double>(j, "median_energy_j");
  u.median_page_bytes = opt_from<double>(j, "median_page_bytes");
  u.cpu = opt_from<CpuPercentiles>(j, "cpu");
  u.loads = j.at("loads").get<std::vector<LoadMetrics>>();
}

void to_json(json& j, const WpmResult& r) {
  j = {{"request", r.request},
       {"device_id", r.request.device_id},
       {"browser", r.request.browser},
       {"reps", r.request.reps},
       {"steps", r.steps},
       {"urls", r.urls},
       {"trace_ids", r.trace_ids},
       {"started_at", r.started_at},
       {"finished_at", r.finished_at},
       {"session_started_at", r.session_started_at},
       {"total_energy_j", opt(r.total_energy_j)},
       {"idle_energy_j", opt(r.idle_energy_j)},
       {"ok", r.ok},
       {"error", r.error.empty() ? json(nullptr) : json(r.error)}};
}

void from_json(const json& j, WpmResult& r) {
  r.request = j.at("request").get<WpmRequest>();
  r.steps = j.at("steps").get<std::vector<std::string>>();
  r.urls = j.at("urls").get<std::vector<UrlResult>>();
  r.trace_ids = j.at("trace_ids").get<std::vector<TraceId>>();
  r.started_at = j.at("started_at").get<double>();
  r.finished_at = j.at("finished_at").get<double>();
  r.session_started_at = j.value("session_started_at", 0.0);
  r.total_energy_j = opt_from<double>(j, "total_energy_j");
  r.idle_energy_j = opt_from<double>(j, "idle_energy_j");
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").is_null() ? std::string{} : j["error"].get<std::string>();
}

void aggregate(UrlResult& url) {
  std::vector<double> energies;
  std::vector<double> bytes;
  std::vector<double> p25, p50, p75;
  url.successful_reps = 0;
  for (const auto& l : url.loads) {
    if (!l.ok) continue;
    ++url.successful_reps;
    if (l.energy_j) energies.push_back(*l.energy_j);
    bytes.push_back(l.page_bytes);
    if (auto p = cpu_percentiles(l.cpu_samples)) {
      p25.push_back(p->p25);
      p50.push_back(p->p50);
      p75.push_back(p->p75);
    }
  }
  url.failed = url.successful_reps == 0;
  url.median_energy_j = median(energies);
  url.median_page_bytes = median(bytes);
  url.cpu.reset();
  if (!p50.empty()) url.cpu = CpuPercentiles{*median(p25), *median(p50), *median(p75)};
}

WpmResult run(controller::Controller& ctl, const WpmRequest& request, const Catalog& catalog) {
  request.validate();
  if (!ctl.has_device(request.device_id)) throw Error(Errc::not_found, "unknown device '" + request.device_id + "'");
  const auto& id = request.device_id;
  auto& dev = ctl.device(id);
  dev.set_page_resolver(catalog.resolver());

  WpmResult res;
  res.request = request;
  res.started_at = ctl.now();
  for (const auto& u : request.urls) res.urls.push_back(UrlResult{u, {}, 0, false, {}, {}, {}});

  std::optional<TraceId> trace_id;
  try {
    res.steps.push_back("node_setup");
    ctl.node_setup(id, request.power, request.visual);
    res.steps.push_back("device_setup");
    ctl.device_setup(id);
    if (request.power) {
      trace_id = ctl.start_monitor(id, 0);
      res.trace_ids.push_back(*trace_id);
      res.session_started_at = ctl.now();
    }
    for (int rep = 0; rep < request.reps; ++rep) {
      res.steps.push_back("browser_setup");
      browser_setup(ctl, id, request.browser);
      res.steps.push_back("run_test");
      const double t0 = ctl.now();
      for (std::size_t i = 0; i < request.urls.size(); ++i) {
        const double slot = t0 + static_cast<double>(i) * request.page_slot_s;
        if (ctl.now() < slot) ctl.advance(slot - ctl.now());
        res.urls[i].loads.push_back(load_page(ctl, request, request.urls[i], rep));
      }
      const double last = t0 + static_cast<double>(request.urls.size()) * request.page_slot_s;
      if (ctl.now() < last) ctl.advance(last - ctl.now());
    }
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }

  if (ctl.session_running()) ctl.stop_monitor();
  res.steps.push_back("cleanup");
  try {
    ctl.cleanup(id);
  } catch (const std::exception& e) {
    res.ok = false;
    if (res.error.empty()) res.error = std::string("cleanup: ") + e.what();
  }

  if (trace_id) {
    const auto trace = ctl.find_trace(*trace_id);
    const double t0 = trace->metadata().started_at;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (auto& u : res.urls) {
      for (auto& l : u.loads) {
        l.energy_j = trace::energy_in_window(*trace, l.window_start - t0, l.window_end - t0);
        spans.emplace_back(trace->index_at_or_after(l.window_start - t0), trace->index_at_or_after(l.window_end - t0));
      }
    }
    std::sort(spans.begin(), spans.end());
    double idle = 0.0;
    std::size_t cursor = 0;
    for (const auto& [a, b] : spans) {
      if (a > cursor) idle += trace::energy_between(*trace, cursor, a);
      cursor = std::max(cursor, b);
    }
    if (cursor < trace->size()) idle += trace::energy_between(*trace, cursor, trace->size());
    res.idle_energy_j = idle;
    res.total_energy_j = trace::energy(*trace);
  }
  for (auto& u : res.urls) aggregate(u);
  res.finished_at = ctl.now();
  return res;
}

}  // namespace pb::wpm
