#include "pb/server/controller_link.hpp"

#include <httplib.h>

#include "pb/common/error.hpp"
#include "pb/service/http_util.hpp"

namespace pb::server {

using nlohmann::json;

class FakeLink final : public ControllerLink {
 public:
  explicit FakeLink(std::shared_ptr<FakeNode> node) : node_(std::move(node)) {}

  json status() override {
    std::lock_guard lock(node_->mu_);
    reach();
    return {{"node_id", node_->id_}, {"devices", node_->devices_}, {"safe", true}};
  }

  void start_job(const JobSpec& spec) override {
    std::lock_guard lock(node_->mu_);
    reach();
    if (node_->jobs_.count(spec.job_id)) throw Error(Errc::conflict, "job already started");
    node_->jobs_[spec.job_id] = FakeNode::Job{node_->plan_polls_, node_->plan_outcome_, false};
    node_->order_.push_back(spec.job_id);
    node_->max_in_flight_ = std::max(node_->max_in_flight_, ++node_->in_flight_);
  }

  RemoteJobStatus job_status(const JobId& id) override {
    std::lock_guard lock(node_->mu_);
    reach();
    auto it = node_->jobs_.find(id);
    if (it == node_->jobs_.end()) throw Error(Errc::not_found, "no job " + id);
    auto& job = it->second;
    if (!job.done && --job.polls_left <= 0) {
      job.done = true;
      --node_->in_flight_;
    }
    RemoteJobStatus s;
    s.state = job.done ? job.outcome : JobState::running;
    if (job.done) s.artifacts.push_back({"log.txt", "job:" + id});
    if (s.state == JobState::failed) s.error = "scripted failure";
    return s;
  }

  void abort_job(const JobId& id) override {
    std::lock_guard lock(node_->mu_);
    reach();
    auto it = node_->jobs_.find(id);
    if (it == node_->jobs_.end()) throw Error(Errc::not_found, "no job " + id);
    if (!it->second.done) {
      it->second.done = true;
      it->second.outcome = JobState::aborted;
      --node_->in_flight_;
    }
  }

  void cleanup() override {
    std::lock_guard lock(node_->mu_);
    reach();
    ++node_->cleanups_;
  }

  std::string fetch_artifact(const JobId& job, const std::string& name) override {
    std::lock_guard lock(node_->mu_);
    reach();
    if (!node_->jobs_.count(job) || name != "log.txt") throw Error(Errc::not_found, "no artifact " + name);
    return "log of " + job + "\n";
  }

 private:
  void reach() const {
    if (!node_->reachable_) throw Error(Errc::unreachable, node_->id_ + " does not answer");
  }

  std::shared_ptr<FakeNode> node_;
};

namespace {

class DeadLink final : public ControllerLink {
 public:
  json status() override { fail(); }
  void start_job(const JobSpec&) override { fail(); }
  RemoteJobStatus job_status(const JobId&) override { fail(); }
  void abort_job(const JobId&) override { fail(); }
  void cleanup() override { fail(); }
  std::string fetch_artifact(const JobId&, const std::string&) override { fail(); }

 private:
  [[noreturn]] static void fail() { throw Error(Errc::unreachable, "no such node"); }
};

}  // namespace

void to_json(json& j, const RemoteJobStatus& s) {
  j = {{"state", s.state}, {"artifacts", s.artifacts}, {"error", s.error.empty() ? json(nullptr) : json(s.error)}};
}

void from_json(const json& j, RemoteJobStatus& s) {
  s.state = j.at("state").get<JobState>();
  s.artifacts = j.value("artifacts", std::vector<Artifact>{});
  s.error = j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : std::string{};
}

// --- HTTP ------------------------------------------------------------------------

HttpControllerLink::HttpControllerLink(std::string address, double timeout_s) : timeout_s_(timeout_s) {
  std::tie(host_, port_) = service::split_address(address, 8081);
}

namespace {

httplib::Client client(const std::string& host, int port, double timeout_s) {
  httplib::Client c(host, port);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  c.set_connection_timeout(sec, usec);
  c.set_read_timeout(sec, usec);
  c.set_write_timeout(sec, usec);
  return c;
}

std::string checked(const httplib::Result& r, const std::string& what) {
  if (!r) throw Error(Errc::unreachable, what + ": " + httplib::to_string(r.error()));
  if (r->status >= 300) service::throw_remote(r->status, r->body);
  return r->body;
}

}  // namespace

json HttpControllerLink::status() {
  auto c = client(host_, port_, timeout_s_);
  return json::parse(checked(c.Get("/status"), "status"));
}

void HttpControllerLink::start_job(const JobSpec& spec) {
  auto c = client(host_, port_, timeout_s_);
  checked(c.Post("/jobs/run", json(spec).dump(), "application/json"), "start job");
}

RemoteJobStatus HttpControllerLink::job_status(const JobId& id) {
  auto c = client(host_, port_, timeout_s_);
  return json::parse(checked(c.Get("/jobs/" + id), "job status")).get<RemoteJobStatus>();
}

void HttpControllerLink::abort_job(const JobId& id) {
  auto c = client(host_, port_, timeout_s_);
  checked(c.Post("/jobs/" + id + "/abort", "{}", "application/json"), "abort job");
}

void HttpControllerLink::cleanup() {
  auto c = client(host_, port_, timeout_s_);
  checked(c.Post("/cleanup", "{}", "application/json"), "cleanup");
}

std::string HttpControllerLink::fetch_artifact(const JobId& job, const std::string& name) {
  auto c = client(host_, port_, timeout_s_);
  return checked(c.Get("/artifacts/" + job + "/" + name), "artifact");
}

LinkFactory http_link_factory(double timeout_s) {
  return [timeout_s](const NodeId&, const std::string& address) -> std::unique_ptr<ControllerLink> {
    return std::make_unique<HttpControllerLink>(address, timeout_s);
  };
}

// --- fake ------------------------------------------------------------------------

FakeNode::FakeNode(NodeId id, std::vector<DeviceSummary> devices) : id_(std::move(id)), devices_(std::move(devices)) {}

void FakeNode::set_reachable(bool on) {
  std::lock_guard lock(mu_);
  reachable_ = on;
}

void FakeNode::set_devices(std::vector<DeviceSummary> devices) {
  std::lock_guard lock(mu_);
  devices_ = std::move(devices);
}

void FakeNode::set_job_plan(int polls, JobState outcome) {
  std::lock_guard lock(mu_);
  plan_polls_ = polls;
  plan_outcome_ = outcome;
}

int FakeNode::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

int FakeNode::max_in_flight() const {
  std::lock_guard lock(mu_);
  return max_in_flight_;
}

int FakeNode::started() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(order_.size());
}

int FakeNode::cleanups() const {
  std::lock_guard lock(mu_);
  return cleanups_;
}

std::vector<JobId> FakeNode::started_order() const {
  std::lock_guard lock(mu_);
  return order_;
}

std::unique_ptr<ControllerLink> FakeNode::link() { return std::make_unique<FakeLink>(shared_from_this()); }

LinkFactory fake_link_factory(std::map<NodeId, std::shared_ptr<FakeNode>> nodes) {
  return [nodes = std::move(nodes)](const NodeId& id, const std::string&) -> std::unique_ptr<ControllerLink> {
    auto it = nodes.find(id);
    if (it == nodes.end()) return std::make_unique<DeadLink>();
    return it->second->link();
  };
}

}  // namespace pb::server
