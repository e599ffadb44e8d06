#include "pb/server/server.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pb/common/error.hpp"

namespace pb::server {

namespace {

using nlohmann::json;

const std::vector<JobStep>& provisioning_steps() {
  static const std::vector<JobStep> steps{{"status", json::object()}, {"cleanup", json::object()}};
  return steps;
}

void check_artifact_name(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
    throw Error(Errc::validation, "bad artifact name '" + name + "'");
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

AccessServer::AccessServer(ServerOptions options, std::shared_ptr<const Clock> clock, LinkFactory links)
    : options_(std::move(options)), clock_(std::move(clock)), links_(std::move(links)) {
  if (!(options_.refresh_period_s > 0.0)) throw Error(Errc::validation, "refresh period must be positive");
  if (options_.zone.empty()) throw Error(Errc::validation, "empty DNS zone");
  if (options_.state_dir) {
    std::filesystem::create_directories(*options_.state_dir / "artifacts");
    recover();
  }
}

AccessServer::~AccessServer() = default;

// --- registry ------------------------------------------------------------------------

VantagePointRecord AccessServer::register_vantage_point(const Principal& caller, const NodeId& id,
                                                        const std::string& address, const std::string& credential,
                                                        const std::string& location,
                                                        const std::set<std::string>& labels) {
  require_role(caller, {Role::administrator}, "register vantage points");
  if (!valid_node_id(id)) throw Error(Errc::validation, "vantage point id must match [a-z0-9-]{1,32}");
  if (address.empty()) throw Error(Errc::validation, "address is required");
  if (credential.empty()) throw Error(Errc::validation, "credential is required");

  std::lock_guard lock(mu_);
  if (auto it = nodes_.find(id); it != nodes_.end()) {
    auto& slot = it->second;
    if (slot.credential != credential) throw Error(Errc::conflict, "'" + id + "' is registered with another key");
    if (slot.record.address != address) {
      slot.record.address = address;
      slot.link = links_(id, address);
      log_event_locked({{"type", "node_updated"}, {"id", id}, {"address", address}});
      persist_registry_locked();
    }
    return view_locked(slot);
  }

  NodeSlot slot;
  slot.record.id = id;
  slot.record.address = address;
  slot.record.dns_name = dns_name_for(id, options_.zone);
  slot.record.location = location;
  slot.record.labels = labels;
  slot.credential = credential;
  slot.link = links_(id, address);
  auto& stored = nodes_.emplace(id, std::move(slot)).first->second;
  log_event_locked({{"type", "node_registered"}, {"record", stored.record}, {"credential", credential}});

  JobSpec join;
  join.kind = JobKind::control;
  join.constraints.vantage_id = id;
  join.steps = provisioning_steps();
  join.max_duration_s = 600.0;
  join.owner = caller.id;
  enqueue_locked(std::move(join));
  persist_registry_locked();
  return view_locked(stored);
}

void AccessServer::remove_vantage_point(const Principal& caller, const NodeId& id) {
  require_role(caller, {Role::administrator}, "remove vantage points");
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::not_found, "unknown vantage point '" + id + "'");
  if (it->second.active_job) throw Error(Errc::state, "'" + id + "' runs " + *it->second.active_job);
  nodes_.erase(it);
  log_event_locked({{"type", "node_removed"}, {"id", id}});
  // queued jobs pinned to the node can never run now
  for (const auto& jid : std::vector<JobId>(queue_)) {
    auto& job = jobs_.at(jid);
    if (job.spec.constraints.vantage_id == id) transition_locked(job, JobState::aborted, "vantage point removed");
  }
  persist_registry_locked();
}

bool AccessServer::stale_locked(const NodeSlot& node) const {
  return node.record.state == NodeState::online &&
         (!node.record.last_seen || clock_->now() - *node.record.last_seen > 2.0 * options_.refresh_period_s);
}

VantagePointRecord AccessServer::view_locked(const NodeSlot& node) const {
  auto r = node.record;
  if (stale_locked(node)) r.state = NodeState::offline;
  return r;
}

std::vector<VantagePointRecord> AccessServer::list_nodes(const std::optional<std::string>& label,
                                                         const std::optional<NodeState>& state) const {
  std::lock_guard lock(mu_);
  std::vector<VantagePointRecord> out;
  for (const auto& [id, slot] : nodes_) {
    auto r = view_locked(slot);
    if (label && !r.labels.count(*label) && r.location != *label) continue;
    if (state && r.state != *state) continue;
    out.push_back(std::move(r));
  }
  return out;
}

VantagePointRecord AccessServer::node(const NodeId& id) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::not_found, "unknown vantage point '" + id + "'");
  return view_locked(it->second);
}

DeviceListing AccessServer::list_devices(const NodeId& id) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::not_found, "unknown vantage point '" + id + "'");
  return {it->second.record.devices, it->second.record.devices_stale};
}

// --- jobs ----------------------------------------------------------------------------

JobId AccessServer::enqueue_locked(JobSpec spec) {
  const auto seq = ++job_counter_;
  spec.job_id = "job-" + std::to_string(seq);
  JobExecution e;
  e.spec = std::move(spec);
  e.submitted_at = clock_->now();
  e.seq = seq;
  const auto id = e.spec.job_id;
  log_event_locked({{"type", "job_submitted"}, {"job", e}});
  jobs_.emplace(id, std::move(e));
  queue_.push_back(id);
  return id;
}

JobId AccessServer::submit_job(JobSpec spec, const Principal& caller) {
  require_role(caller, {Role::experimenter, Role::administrator}, "submit jobs");
  spec.validate();
  spec.owner = caller.id;
  std::lock_guard lock(mu_);
  if (spec.constraints.vantage_id && !nodes_.count(*spec.constraints.vantage_id)) {
    throw Error(Errc::validation, "unknown vantage point '" + *spec.constraints.vantage_id + "'");
  }
  if (spec.constraints.device_id) {
    const bool known = std::any_of(nodes_.begin(), nodes_.end(), [&](const auto& kv) {
      const auto& devs = kv.second.record.devices;
      return std::any_of(devs.begin(), devs.end(),
                         [&](const DeviceSummary& d) { return d.device_id == *spec.constraints.device_id; });
    });
    if (!known) throw Error(Errc::validation, "unknown device '" + *spec.constraints.device_id + "'");
  }
  return enqueue_locked(std::move(spec));
}

JobExecution AccessServer::job(const JobId& id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
  return it->second;
}

std::vector<JobExecution> AccessServer::jobs() const {
  std::lock_guard lock(mu_);
  std::vector<JobExecution> out;
  for (const auto& [id, e] : jobs_) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return out;
}

void AccessServer::transition_locked(JobExecution& job, JobState to, const std::string& error) {
  const auto from = job.state;
  if (!legal_transition(from, to)) {
    throw Error(Errc::state, job.spec.job_id + ": " + std::string(to_string(from)) + " -> " +
                                 std::string(to_string(to)));
  }
  job.state = to;
  const double now = clock_->now();
  if (to == JobState::running) job.started_at = now;
  if (!error.empty()) job.error = error;
  if (from == JobState::queued) std::erase(queue_, job.spec.job_id);
  if (to == JobState::dispatched && ++active_count_[job.vantage_id] > 1) ++violations_;
  if (is_terminal(to)) {
    job.finished_at = now;
    grants_.erase(job.spec.job_id);
    if (from != JobState::queued) {
      --active_count_[job.vantage_id];
      if (auto it = nodes_.find(job.vantage_id); it != nodes_.end() && it->second.active_job == job.spec.job_id) {
        it->second.active_job.reset();
      }
    }
  }
  log_event_locked({{"type", "job_state"},
                    {"job_id", job.spec.job_id},
                    {"state", to},
                    {"vantage_id", job.vantage_id},
                    {"error", job.error},
                    {"artifacts", job.artifacts}});
}

bool AccessServer::satisfies_locked(const NodeSlot& node, const JobSpec& spec) const {
  const auto& c = spec.constraints;
  if (c.vantage_id && *c.vantage_id != node.record.id) return false;
  if (c.device_id) {
    const auto& devs = node.record.devices;
    if (std::none_of(devs.begin(), devs.end(), [&](const DeviceSummary& d) { return d.device_id == *c.device_id; })) {
      return false;
    }
  }
  for (const auto& l : c.labels) {
    if (!node.record.labels.count(l) && node.record.location != l) return false;
  }
  return true;
}

std::vector<JobId> AccessServer::schedule() {
  struct Pick {
    NodeId node;
    JobSpec spec;
    std::shared_ptr<ControllerLink> link;
    std::shared_ptr<std::mutex> call_mu;
  };
  std::vector<Pick> picks;
  {
    std::lock_guard lock(mu_);
    for (auto& [nid, slot] : nodes_) {
      if (slot.record.state != NodeState::online || stale_locked(slot) || slot.active_job) continue;
      for (const JobId jid : queue_) {  // copy: dispatching erases it from the queue
        auto& job = jobs_.at(jid);
        if (!satisfies_locked(slot, job.spec)) continue;
        job.vantage_id = nid;
        transition_locked(job, JobState::dispatched);
        slot.active_job = jid;
        picks.push_back({nid, job.spec, slot.link, slot.call_mu});
        break;
      }
    }
  }

  std::vector<JobId> dispatched;
  for (auto& p : picks) {
    std::optional<Error> failure;
    {
      std::lock_guard call(*p.call_mu);
      try {
        p.link->start_job(p.spec);
      } catch (const Error& e) {
        failure = e;
      } catch (const std::exception& e) {
        failure = Error(Errc::io, e.what());
      }
    }
    bool orphaned = false;
    {
      std::lock_guard lock(mu_);
      auto& job = jobs_.at(p.spec.job_id);
      if (job.state != JobState::dispatched) {
        orphaned = !failure;  // aborted while the start was in flight
      } else if (failure) {
        transition_locked(job, JobState::failed, failure->what());
        if (failure->code() == Errc::unreachable) {
          if (auto it = nodes_.find(p.node); it != nodes_.end()) it->second.record.state = NodeState::offline;
          log_event_locked({{"type", "node_state"}, {"id", p.node}, {"state", NodeState::offline}});
        }
      } else {
        transition_locked(job, JobState::running);
        dispatched.push_back(p.spec.job_id);
      }
    }
    if (orphaned) {
      std::lock_guard call(*p.call_mu);
      try {
        p.link->abort_job(p.spec.job_id);
        p.link->cleanup();
      } catch (const std::exception&) {
      }
    }
  }
  return dispatched;
}

void AccessServer::collect_artifacts(const JobId& id, ControllerLink& link, const std::vector<Artifact>& artifacts) {
  if (!options_.state_dir) return;
  const auto dir = *options_.state_dir / "artifacts" / id;
  for (const auto& a : artifacts) {
    try {
      check_artifact_name(a.name);
      const auto content = link.fetch_artifact(id, a.name);
      std::filesystem::create_directories(dir);
      write_atomic(dir / a.name, content);
    } catch (const std::exception&) {
      // left on the node; artifact() fetches it on demand
    }
  }
}

void AccessServer::poll() {
  struct Active {
    JobId id;
    double started_at;
    double max_duration;
    std::shared_ptr<ControllerLink> link;
    std::shared_ptr<std::mutex> call_mu;
  };
  std::vector<Active> active;
  {
    std::lock_guard lock(mu_);
    for (const auto& [nid, slot] : nodes_) {
      if (!slot.active_job) continue;
      const auto& job = jobs_.at(*slot.active_job);
      if (job.state != JobState::running) continue;
      active.push_back({job.spec.job_id, *job.started_at, job.spec.max_duration_s, slot.link, slot.call_mu});
    }
  }

  for (const auto& a : active) {
    std::lock_guard call(*a.call_mu);
    if (clock_->now() - a.started_at > a.max_duration) {
      try {
        a.link->abort_job(a.id);
      } catch (const std::exception&) {
      }
      try {
        a.link->cleanup();
      } catch (const std::exception&) {
      }
      std::lock_guard lock(mu_);
      auto& job = jobs_.at(a.id);
      if (job.state == JobState::running) transition_locked(job, JobState::aborted, "exceeded max_duration");
      continue;
    }
    RemoteJobStatus st;
    try {
      st = a.link->job_status(a.id);
    } catch (const Error& e) {
      if (e.code() == Errc::unreachable) continue;  // refresh decides about the node
      std::lock_guard lock(mu_);
      auto& job = jobs_.at(a.id);
      if (job.state == JobState::running) transition_locked(job, JobState::failed, e.what());
      continue;
    }
    if (!is_terminal(st.state)) continue;
    collect_artifacts(a.id, *a.link, st.artifacts);
    std::lock_guard lock(mu_);
    auto& job = jobs_.at(a.id);
    if (job.state != JobState::running) continue;
    job.artifacts = st.artifacts;
    transition_locked(job, st.state, st.error);
  }
}

std::vector<JobId> AccessServer::tick() {
  poll();
  return schedule();
}

JobExecution AccessServer::abort_job(const Principal& caller, const JobId& id) {
  std::shared_ptr<ControllerLink> link;
  std::shared_ptr<std::mutex> call_mu;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
    auto& job = it->second;
    if (caller.role != Role::administrator && caller.id != job.spec.owner) {
      throw Error(Errc::permission, "only the owner or an administrator may abort " + id);
    }
    if (is_terminal(job.state)) throw Error(Errc::state, id + " already finished");
    if (job.state == JobState::queued) {
      transition_locked(job, JobState::aborted, "aborted by " + caller.id);
      return job;
    }
    auto& slot = nodes_.at(job.vantage_id);
    link = slot.link;
    call_mu = slot.call_mu;
  }
  {
    std::lock_guard call(*call_mu);
    try {
      link->abort_job(id);
    } catch (const std::exception&) {
    }
    try {
      link->cleanup();
    } catch (const std::exception&) {
    }
  }
  std::lock_guard lock(mu_);
  auto& job = jobs_.at(id);
  if (!is_terminal(job.state)) transition_locked(job, JobState::aborted, "aborted by " + caller.id);
  return job;
}

std::string AccessServer::artifact(const JobId& id, const std::string& name) {
  check_artifact_name(name);
  std::shared_ptr<ControllerLink> link;
  std::shared_ptr<std::mutex> call_mu;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
    const auto& arts = it->second.artifacts;
    if (std::none_of(arts.begin(), arts.end(), [&](const Artifact& a) { return a.name == name; })) {
      throw Error(Errc::not_found, id + " has no artifact '" + name + "'");
    }
    if (options_.state_dir) {
      const auto path = *options_.state_dir / "artifacts" / id / name;
      if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
      }
    }
    auto node = nodes_.find(it->second.vantage_id);
    if (node == nodes_.end()) throw Error(Errc::not_found, "vantage point of " + id + " is gone");
    link = node->second.link;
    call_mu = node->second.call_mu;
  }
  std::lock_guard call(*call_mu);
  return link->fetch_artifact(id, name);
}

// --- refresh ---------------------------------------------------------------------------

json AccessServer::refresh() {
  struct Probe {
    NodeId id;
    std::shared_ptr<ControllerLink> link;
    std::shared_ptr<std::mutex> call_mu;
  };
  std::vector<Probe> probes;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, slot] : nodes_) probes.push_back({id, slot.link, slot.call_mu});
  }
  for (const auto& p : probes) {
    std::optional<json> status;
    {
      std::lock_guard call(*p.call_mu);
      try {
        status = p.link->status();
      } catch (const std::exception&) {
      }
    }
    std::lock_guard lock(mu_);
    auto it = nodes_.find(p.id);
    if (it == nodes_.end()) continue;
    auto& r = it->second.record;
    const auto before = r;
    if (status) {
      r.state = NodeState::online;
      r.last_seen = clock_->now();
      try {
        r.devices = status->value("devices", std::vector<DeviceSummary>{});
        r.devices_stale = false;
      } catch (const json::exception&) {
        r.devices_stale = true;
      }
    } else {
      r.state = NodeState::offline;
      if (auto& active = it->second.active_job) {
        auto& job = jobs_.at(*active);
        if (!is_terminal(job.state)) transition_locked(job, JobState::failed, "vantage point unreachable");
      }
    }
    if (r.state != before.state || r.devices != before.devices || r.devices_stale != before.devices_stale) {
      log_event_locked({{"type", "node_state"},
                        {"id", p.id},
                        {"state", r.state},
                        {"devices", r.devices},
                        {"devices_stale", r.devices_stale}});
    }
  }
  std::lock_guard lock(mu_);
  last_refresh_ = clock_->now();
  persist_registry_locked();
  json nodes = json::array();
  for (const auto& [id, slot] : nodes_) nodes.push_back(view_locked(slot));
  return {{"zone", options_.zone}, {"nodes", nodes}};
}

json AccessServer::registry_snapshot() const {
  std::lock_guard lock(mu_);
  json nodes = json::array();
  for (const auto& [id, slot] : nodes_) nodes.push_back(view_locked(slot));
  return {{"zone", options_.zone}, {"nodes", nodes}};
}

double AccessServer::next_refresh_at() const {
  std::lock_guard lock(mu_);
  return last_refresh_ + options_.refresh_period_s;
}

// --- sharing ---------------------------------------------------------------------------

void AccessServer::share_session(const Principal& owner, const JobId& id, const std::string& tester_id) {
  if (tester_id.empty()) throw Error(Errc::validation, "tester id is required");
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
  if (owner.role != Role::administrator && owner.id != it->second.spec.owner) {
    throw Error(Errc::permission, "only the owner may share " + id);
  }
  if (it->second.state != JobState::running) throw Error(Errc::state, id + " is not running");
  grants_[id].insert(tester_id);
}

SessionGrant AccessServer::attach(const Principal& tester, const JobId& id) const {
  require_role(tester, {Role::tester, Role::administrator}, "attach to sessions");
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::not_found, "unknown job '" + id + "'");
  const auto& job = it->second;
  if (job.state != JobState::running) throw Error(Errc::state, id + " is not running");
  auto g = grants_.find(id);
  if (tester.role != Role::administrator && (g == grants_.end() || !g->second.count(tester.id))) {
    throw Error(Errc::permission, "'" + tester.id + "' was not invited to " + id);
  }
  const auto& node = nodes_.at(job.vantage_id);
  std::optional<DeviceId> device = job.spec.constraints.device_id;
  if (!device && !node.record.devices.empty()) device = node.record.devices.front().device_id;
  return {id, job.vantage_id, node.record.address, device};
}

// --- persistence -------------------------------------------------------------------------

void AccessServer::log_event_locked(json event) {
  if (!options_.state_dir || recovering_) return;
  event["seq"] = ++event_seq_;
  event["t"] = clock_->now();
  std::ofstream out(*options_.state_dir / "events.jsonl", std::ios::app);
  if (!out) throw Error(Errc::io, "cannot append to the event log");
  out << event.dump() << '\n';
}

void AccessServer::persist_registry_locked() const {
  if (!options_.state_dir) return;
  json nodes = json::array();
  for (const auto& [id, slot] : nodes_) nodes.push_back(slot.record);
  write_atomic(*options_.state_dir / "registry.json",
               json{{"zone", options_.zone}, {"nodes", nodes}}.dump(2) + "\n");
}

void AccessServer::apply_event(const json& e) {
  const auto type = e.at("type").get<std::string>();
  if (type == "node_registered") {
    NodeSlot slot;
    slot.record = e.at("record").get<VantagePointRecord>();
    slot.record.dns_name = dns_name_for(slot.record.id, options_.zone);
    slot.credential = e.at("credential").get<std::string>();
    slot.link = links_(slot.record.id, slot.record.address);
    const auto id = slot.record.id;
    nodes_[id] = std::move(slot);
  } else if (type == "node_updated") {
    auto& slot = nodes_.at(e.at("id").get<std::string>());
    slot.record.address = e.at("address").get<std::string>();
    slot.link = links_(slot.record.id, slot.record.address);
  } else if (type == "node_removed") {
    nodes_.erase(e.at("id").get<std::string>());
  } else if (type == "node_state") {
    auto it = nodes_.find(e.at("id").get<std::string>());
    if (it == nodes_.end()) return;
    it->second.record.state = e.at("state").get<NodeState>();
    if (e.contains("devices")) it->second.record.devices = e["devices"].get<std::vector<DeviceSummary>>();
    if (e.contains("devices_stale")) it->second.record.devices_stale = e["devices_stale"].get<bool>();
    if (it->second.record.state == NodeState::online) it->second.record.last_seen = e.at("t").get<double>();
  } else if (type == "job_submitted") {
    auto job = e.at("job").get<JobExecution>();
    job_counter_ = std::max(job_counter_, job.seq);
    queue_.push_back(job.spec.job_id);
    jobs_[job.spec.job_id] = std::move(job);
  } else if (type == "job_state") {
    auto& job = jobs_.at(e.at("job_id").get<std::string>());
    const auto to = e.at("state").get<JobState>();
    const double t = e.at("t").get<double>();
    if (job.state == JobState::queued) std::erase(queue_, job.spec.job_id);
    job.state = to;
    job.vantage_id = e.value("vantage_id", job.vantage_id);
    job.error = e.value("error", job.error);
    job.artifacts = e.value("artifacts", job.artifacts);
    if (to == JobState::running) job.started_at = t;
    if (is_terminal(to)) job.finished_at = t;
  }
}

void AccessServer::recover() {
  const auto path = *options_.state_dir / "events.jsonl";
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  std::string line;
  std::lock_guard lock(mu_);
  recovering_ = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto e = json::parse(line, nullptr, false);
    if (e.is_discarded()) break;  // torn tail of a crashed append
    try {
      apply_event(e);
      event_seq_ = std::max(event_seq_, e.value("seq", std::uint64_t{0}));
    } catch (const std::exception&) {
      break;
    }
  }
  recovering_ = false;
  // a job in flight when the server died has no owner left to collect it
  for (auto& [id, job] : jobs_) {
    if (job.state == JobState::dispatched || job.state == JobState::running) {
      ++active_count_[job.vantage_id];
      transition_locked(job, JobState::failed, "access server restarted");
    }
  }
  persist_registry_locked();
}

}  // namespace pb::server
