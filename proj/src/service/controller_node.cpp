#include "pb/service/controller_node.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <iomanip>

#include "pb/common/error.hpp"
#include "pb/replay/replayer.hpp"
#include "pb/trace/analysis.hpp"
#include "pb/wpm/pipeline.hpp"
#include "pb/wpm/report.hpp"

namespace pb::service {

using nlohmann::json;
using server::JobState;

namespace {

struct JobAborted {};

const json& need(const json& p, const char* key) {
  if (!p.is_object() || !p.contains(key) || p[key].is_null()) {
    throw Error(Errc::validation, std::string("missing parameter '") + key + "'");
  }
  return p[key];
}

template <class T>
T get(const json& p, const char* key) {
  try {
    return need(p, key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::validation, std::string("bad parameter '") + key + "'");
  }
}

template <class T>
T get_or(const json& p, const char* key, T fallback) {
  if (!p.is_object() || !p.contains(key) || p[key].is_null()) return fallback;
  return get<T>(p, key);
}

template <class T>
std::optional<T> get_opt(const json& p, const char* key) {
  if (!p.is_object() || !p.contains(key) || p[key].is_null()) return std::nullopt;
  return get<T>(p, key);
}

std::optional<automation::Backend> backend_param(const json& p, const char* key) {
  const auto name = get_opt<std::string>(p, key);
  if (!name) return std::nullopt;
  return automation::backend_from_string(*name);
}

json trace_summary(const trace::PowerTrace& t) {
  auto j = trace::metadata_json(t);
  j["duration_s"] = t.duration();
  j["energy_j"] = trace::energy(t);
  return j;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& controller_ops() {
  static const std::vector<std::string> ops = {"power_monitor",    "set_voltage", "batt_switch",     "start_monitor",
                                               "stop_monitor",     "device_mirroring", "set_usb",   "execute_command",
                                               "node_setup",       "device_setup", "cleanup"};
  return ops;
}

const std::vector<std::string>& job_step_names() {
  static const std::vector<std::string> names = [] {
    auto n = controller_ops();
    for (const char* extra : {"status", "wait", "sleep", "wpm", "replay"}) n.emplace_back(extra);
    return n;
  }();
  return names;
}

json frame_json(const device::Frame& f) {
  return {{"seq", f.seq},
          {"t", f.t},
          {"size", f.size},
          {"cells", f.cells},
          {"content_hash", hex64(f.content_hash)},
          {"encoded_bytes", f.encoded_bytes}};
}

// --- node -----------------------------------------------------------------------

ControllerNode::ControllerNode(std::unique_ptr<controller::Controller> ctl, ControllerNodeOptions options)
    : node_id_(ctl->node_id()), options_(std::move(options)), ctl_(std::move(ctl)) {
  worker_ = std::thread([this] { worker(); });
  if (options_.time_scale > 0) pacer_ = std::thread([this] { pacer(); });
}

ControllerNode::~ControllerNode() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
    if (running_) jobs_.at(*running_).abort = true;
  }
  cv_.notify_all();
  worker_.join();
  if (pacer_.joinable()) pacer_.join();
}

json ControllerNode::status() {
  std::lock_guard lock(mu_);
  auto doc = ctl_->status();
  doc["job"] = running_ ? json(*running_) : json();
  return doc;
}

std::vector<DeviceSummary> ControllerNode::devices() {
  std::lock_guard lock(mu_);
  return ctl_->device_summaries();
}

void ControllerNode::require_idle_locked(std::string_view op) const {
  if (running_) {
    throw Error(Errc::exclusivity, std::string(op) + " refused: job " + *running_ + " owns the node");
  }
}

namespace {

DeviceId device_param(const controller::Controller& ctl, const json& p, const std::optional<DeviceId>& fallback) {
  if (auto id = get_opt<std::string>(p, "device_id")) return *id;
  if (fallback) return *fallback;
  const auto ids = ctl.device_ids();
  if (ids.size() == 1) return ids.front();
  throw Error(Errc::validation, "missing parameter 'device_id'");
}

/// One Table 1 operation; the caller holds the node lock.
json run_op(controller::Controller& ctl, std::string_view op, const json& p, const std::optional<DeviceId>& device,
            const JobId& job) {
  if (op == "power_monitor") {
    return {{"socket", controller::to_string(ctl.power_monitor(get<bool>(p, "on")))}};
  }
  if (op == "set_voltage") {
    const auto cfg = ctl.set_voltage(get<double>(p, "volts"));
    return {{"voltage", *cfg.voltage}};
  }
  if (op == "batt_switch") {
    const auto id = device_param(ctl, p, device);
    return {{"device_id", id}, {"channel", controller::to_string(ctl.batt_switch(id))}};
  }
  if (op == "start_monitor") {
    const auto id = device_param(ctl, p, device);
    return {{"trace_id", ctl.start_monitor(id, get_or<double>(p, "duration_s", 0.0), job)}};
  }
  if (op == "stop_monitor") {
    return trace_summary(*ctl.stop_monitor());
  }
  if (op == "device_mirroring") {
    return ctl.device_mirroring(device_param(ctl, p, device), get<bool>(p, "on"));
  }
  if (op == "set_usb") {
    const auto id = device_param(ctl, p, device);
    const bool on = get<bool>(p, "on");
    ctl.set_usb(id, on);
    return {{"device_id", id}, {"usb", on}};
  }
  if (op == "execute_command") {
    const auto id = device_param(ctl, p, device);
    const auto hint = backend_param(p, "backend");
    if (auto line = get_opt<std::string>(p, "shell")) return ctl.execute_shell(id, *line, hint);
    return ctl.execute_command(id, get<automation::InputCommand>(p, "command"), hint,
                               get_or<bool>(p, "mobile_network", false));
  }
  if (op == "node_setup") {
    return ctl.node_setup(device_param(ctl, p, device), get_or<bool>(p, "power", true), get_or<bool>(p, "visual", false),
                          get_or<bool>(p, "mobile_network", false), backend_param(p, "automation"));
  }
  if (op == "device_setup") {
    return ctl.device_setup(device_param(ctl, p, device), get_opt<int>(p, "brightness"),
                            get_or<bool>(p, "mobile_network", false));
  }
  if (op == "cleanup") {
    return ctl.cleanup(get_opt<std::string>(p, "device_id"));
  }
  throw Error(Errc::not_found, "unknown operation '" + std::string(op) + "'");
}

}  // namespace

json ControllerNode::call(std::string_view op, const json& params) {
  if (op == "cleanup") return cleanup();
  if (std::find(controller_ops().begin(), controller_ops().end(), op) == controller_ops().end()) {
    throw Error(Errc::not_found, "unknown operation '" + std::string(op) + "'");
  }
  std::lock_guard lock(mu_);
  require_idle_locked(op);
  return run_op(*ctl_, op, params, std::nullopt, {});
}

// --- jobs -------------------------------------------------------------------------

void ControllerNode::start_job(server::JobSpec spec) {
  spec.validate();
  if (spec.job_id.empty()) throw Error(Errc::validation, "job without an id");
  for (const auto& s : spec.steps) {
    if (std::find(job_step_names().begin(), job_step_names().end(), s.name) == job_step_names().end()) {
      throw Error(Errc::validation, "unknown step '" + s.name + "'");
    }
  }
  {
    std::lock_guard lock(mu_);
    if (spec.constraints.device_id && !ctl_->has_device(*spec.constraints.device_id)) {
      throw Error(Errc::validation, "no device '" + *spec.constraints.device_id + "' on " + node_id_);
    }
    if (running_) throw Error(Errc::exclusivity, "job " + *running_ + " already runs on " + node_id_);
    if (jobs_.count(spec.job_id)) throw Error(Errc::conflict, "job " + spec.job_id + " was already started");
    const auto id = spec.job_id;
    jobs_[id].spec = std::move(spec);
    running_ = id;
    pending_ = id;
  }
  cv_.notify_all();
}

server::RemoteJobStatus ControllerNode::job_status(const JobId& id) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
  server::RemoteJobStatus st;
  st.state = it->second.state;
  st.error = it->second.error;
  for (const auto& [name, _] : it->second.artifacts) st.artifacts.push_back({name, "controller:" + node_id_});
  return st;
}

void ControllerNode::abort_job(const JobId& id) {
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
    if (server::is_terminal(it->second.state)) return;
    it->second.abort = true;
  }
  cv_.notify_all();
}

bool ControllerNode::wait_idle(double timeout_s) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, std::chrono::duration<double>(timeout_s), [&] { return !running_; });
}

std::string ControllerNode::artifact(const JobId& job, const std::string& name) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(job);
  if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + job + "'");
  auto a = it->second.artifacts.find(name);
  if (a == it->second.artifacts.end()) throw Error(Errc::not_found, "job " + job + " has no artifact '" + name + "'");
  return a->second;
}

json ControllerNode::cleanup() {
  std::unique_lock lock(mu_);
  if (running_) {
    jobs_.at(*running_).abort = true;
    cv_.notify_all();
    cv_.wait(lock, [&] { return !running_; });
  }
  return ctl_->cleanup();
}

void ControllerNode::worker() {
  while (true) {
    JobId id;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || pending_; });
      if (!pending_) return;
      id = *pending_;
      pending_.reset();
    }
    run_job(id);
  }
}

void ControllerNode::pacer() {
  using clock = std::chrono::steady_clock;
  auto last = clock::now();
  std::unique_lock lock(mu_);
  while (!stop_) {
    cv_.wait_for(lock, std::chrono::milliseconds(100));
    const auto now = clock::now();
    const double wall = std::chrono::duration<double>(now - last).count();
    last = now;
    if (stop_ || running_) continue;
    try {
      ctl_->advance(wall * options_.time_scale);
    } catch (const std::exception&) {
      // a faulted session stays faulted; the clock keeps going
    }
  }
}

void ControllerNode::check_abort(const JobRecord& job) {
  if (job.abort || stop_) throw JobAborted{};
}

void ControllerNode::wait_sim(JobRecord& job, double seconds) {
  if (seconds < 0) throw Error(Errc::validation, "negative wait");
  double left = seconds;
  while (left > 0) {
    std::lock_guard lock(mu_);  // released between chunks so frames and status stay live
    check_abort(job);
    const double chunk = std::min(left, 1.0);
    ctl_->advance(chunk);
    left -= chunk;
  }
}

void ControllerNode::sleep_wall(JobRecord& job, double seconds) {
  if (seconds < 0) throw Error(Errc::validation, "negative sleep");
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, std::chrono::duration<double>(seconds), [&] { return job.abort || stop_; });
  check_abort(job);
}

json ControllerNode::run_step(JobRecord& job, const server::JobStep& step, std::vector<TraceId>& known) {
  const auto& p = step.params;
  const auto& device = job.spec.constraints.device_id;
  if (step.name == "wait") {
    wait_sim(job, get<double>(p, "seconds"));
    return json::object();
  }
  if (step.name == "sleep") {
    sleep_wall(job, get<double>(p, "seconds"));
    return json::object();
  }
  std::lock_guard lock(mu_);
  check_abort(job);
  if (step.name == "status") return ctl_->status();
  if (step.name == "wpm") {
    auto body = p;
    if (!body.contains("device_id")) body["device_id"] = device_param(*ctl_, p, device);
    wpm::WpmRequest request;
    try {
      request = body.get<wpm::WpmRequest>();
    } catch (const json::exception& e) {
      throw Error(Errc::validation, std::string("bad wpm request: ") + e.what());
    }
    const auto result = wpm::run(*ctl_, request, options_.catalog);
    job.artifacts["wpm-result.json"] = json(result).dump(2);
    const auto session = result.trace_ids.empty() ? nullptr : ctl_->find_trace(result.trace_ids.front());
    job.artifacts["wpm-report.json"] = wpm::report(result, session.get(), "json");
    collect_traces(job, known);
    if (!result.ok) throw Error(Errc::step_failed, result.error);
    return {{"urls", result.urls.size()}, {"total_energy_j", result.total_energy_j ? json(*result.total_energy_j) : json()}};
  }
  if (step.name == "replay") {
    replay::AutomationScript script;
    if (auto sid = get_opt<std::string>(p, "session_id")) {
      script = replay::compile(recordings_.get(*sid)).script;
    } else {
      script = replay::parse_jsonl(get<std::string>(p, "script"));
    }
    if (auto id = get_opt<std::string>(p, "device_id")) script.device_id = *id;
    if (script.device_id.empty()) script.device_id = device_param(*ctl_, p, device);
    replay::ReplayOptions opts;
    opts.mirroring = get_or<bool>(p, "mirroring", false);
    opts.measure = get_or<bool>(p, "measure", false);
    opts.backend = backend_param(p, "backend");
    opts.needs_mobile_network = get_or<bool>(p, "mobile_network", false);
    const auto result = replay::replay_script(*ctl_, script, opts);
    job.artifacts["replay-log.json"] = json(result).dump(2);
    collect_traces(job, known);
    if (!result.ok) throw Error(Errc::step_failed, "replay stopped after " + std::to_string(result.log.size()) + " commands");
    return {{"commands", result.log.size()}, {"trace_id", result.trace_id ? json(*result.trace_id) : json()}};
  }
  auto out = run_op(*ctl_, step.name, p, device, job.spec.job_id);
  if (step.name == "stop_monitor") collect_traces(job, known);
  return out;
}

void ControllerNode::collect_traces(JobRecord& job, const std::vector<TraceId>& known) {
  for (const auto& id : ctl_->trace_ids()) {
    if (std::find(known.begin(), known.end(), id) != known.end()) continue;
    auto t = ctl_->find_trace(id);
    if (!t || !t->sealed()) continue;
    job.artifacts["trace-" + id + ".csv"] = trace::to_csv(*t);
    job.artifacts["trace-" + id + ".json"] = trace_summary(*t).dump(2);
  }
}

void ControllerNode::run_job(const JobId& id) {
  JobRecord* job = nullptr;
  std::vector<TraceId> known;
  {
    std::lock_guard lock(mu_);
    job = &jobs_.at(id);
    known = ctl_->trace_ids();
  }
  json log = json::array();
  std::string failure;
  bool aborted = false;
  for (std::size_t i = 0; i < job->spec.steps.size(); ++i) {
    const auto& step = job->spec.steps[i];
    try {
      auto result = run_step(*job, step, known);
      log.push_back({{"step", step.name}, {"ok", true}, {"result", std::move(result)}});
    } catch (const JobAborted&) {
      aborted = true;
      break;
    } catch (const std::exception& e) {
      failure = "step " + std::to_string(i) + " (" + step.name + "): " + e.what();
      log.push_back({{"step", step.name}, {"ok", false}, {"error", e.what()}});
      break;
    }
  }
  {
    std::lock_guard lock(mu_);
    if (aborted || !failure.empty()) {
      try {
        ctl_->cleanup();
      } catch (const std::exception& e) {
        log.push_back({{"step", "cleanup"}, {"ok", false}, {"error", e.what()}});
      }
    }
    collect_traces(*job, known);
    job->artifacts["steps.json"] = log.dump(2);
    job->state = aborted ? JobState::aborted : failure.empty() ? JobState::succeeded : JobState::failed;
    job->error = aborted ? "aborted" : failure;
    running_.reset();
  }
  cv_.notify_all();
}

// --- traces, frames, input ------------------------------------------------------------

std::string ControllerNode::trace_csv(const TraceId& id) {
  std::lock_guard lock(mu_);
  auto t = ctl_->find_trace(id);
  if (!t) throw Error(Errc::not_found, "unknown trace '" + id + "'");
  return trace::to_csv(*t);
}

json ControllerNode::trace_metadata(const TraceId& id) {
  std::lock_guard lock(mu_);
  auto t = ctl_->find_trace(id);
  if (!t) throw Error(Errc::not_found, "unknown trace '" + id + "'");
  return trace_summary(*t);
}

device::Frame ControllerNode::frame(const DeviceId& device) {
  std::lock_guard lock(mu_);
  if (!ctl_->has_device(device)) throw Error(Errc::not_found, "unknown device '" + device + "'");
  if (!ctl_->link(device).mirroring) throw Error(Errc::unavailable, "mirroring is off for " + device);
  return ctl_->device(device).render_frame();
}

ScreenSize ControllerNode::screen_locked(const DeviceId& device) {
  for (const auto& d : ctl_->device_summaries()) {
    if (d.device_id == device) return d.screen;
  }
  throw Error(Errc::not_found, "unknown device '" + device + "'");
}

std::string ControllerNode::open_input(const DeviceId& device) {
  std::lock_guard lock(mu_);
  return recordings_.open(device, screen_locked(device));
}

std::size_t ControllerNode::ingest(const std::string& session_id, const std::vector<replay::RecordedEvent>& events,
                                   bool live) {
  using replay::EventKind;
  std::lock_guard lock(mu_);
  const auto session = recordings_.get(session_id);
  if (live) {
    require_idle_locked("live input");
    if (!ctl_->link(session.device_id).mirroring) {
      throw Error(Errc::precondition, "live input needs mirroring on for " + session.device_id);
    }
  }
  const auto count = recordings_.ingest(session_id, events);
  if (!live) return count;
  const auto stored = recordings_.get(session_id);
  auto& dev = ctl_->device(session.device_id);
  bool& pressed = pressed_[session.device_id];
  // the batch as stored, with clamped timestamps
  for (auto i = stored.events.size() - events.size(); i < stored.events.size(); ++i) {
    const auto& e = stored.events[i];
    auto last = last_input_ms_.find(session_id);
    if (options_.time_scale <= 0 && last != last_input_ms_.end() && e.t_ms > last->second) {
      ctl_->advance(static_cast<double>(e.t_ms - last->second) / 1000.0);
    }
    last_input_ms_[session_id] = e.t_ms;
    switch (e.kind) {
      case EventKind::mouse_down:
      case EventKind::mouse_up:
      case EventKind::mouse_move:
        if (e.kind == EventKind::mouse_down) pressed = true;
        if (e.kind == EventKind::mouse_up) pressed = false;
        dev.pointer_event(replay::map_coords(e.position, e.view, stored.device_size), pressed);
        break;
      case EventKind::key_down: dev.key_event(e.key); break;
      case EventKind::key_up: break;
    }
  }
  return count;
}

replay::RecordingSession ControllerNode::seal_input(const std::string& session_id) {
  std::lock_guard lock(mu_);
  last_input_ms_.erase(session_id);
  return recordings_.seal(session_id);
}

replay::RecordingSession ControllerNode::input_session(const std::string& session_id) {
  return recordings_.get(session_id);
}

replay::CompileResult ControllerNode::compile_input(const std::string& session_id) {
  const auto session = recordings_.get(session_id);
  if (session.open) throw Error(Errc::state, "seal session " + session_id + " before compiling it");
  return replay::compile(session);
}

// --- in-process link --------------------------------------------------------------------

json LocalControllerLink::status() { return node_->status(); }
void LocalControllerLink::start_job(const server::JobSpec& spec) { node_->start_job(spec); }
server::RemoteJobStatus LocalControllerLink::job_status(const JobId& id) { return node_->job_status(id); }
void LocalControllerLink::abort_job(const JobId& id) { node_->abort_job(id); }
void LocalControllerLink::cleanup() { node_->cleanup(); }
std::string LocalControllerLink::fetch_artifact(const JobId& job, const std::string& name) {
  return node_->artifact(job, name);
}

server::LinkFactory local_link_factory(std::map<NodeId, std::shared_ptr<ControllerNode>> nodes) {
  return [nodes = std::move(nodes)](const NodeId& id, const std::string&) -> std::unique_ptr<server::ControllerLink> {
    auto it = nodes.find(id);
    if (it == nodes.end()) {
      struct Dead final : server::ControllerLink {
        [[noreturn]] static void fail() { throw Error(Errc::unreachable, "no such node"); }
        json status() override { fail(); }
        void start_job(const server::JobSpec&) override { fail(); }
        server::RemoteJobStatus job_status(const JobId&) override { fail(); }
        void abort_job(const JobId&) override { fail(); }
        void cleanup() override { fail(); }
        std::string fetch_artifact(const JobId&, const std::string&) override { fail(); }
      };
      return std::make_unique<Dead>();
    }
    return std::make_unique<LocalControllerLink>(it->second);
  };
}

}  // namespace pb::service
