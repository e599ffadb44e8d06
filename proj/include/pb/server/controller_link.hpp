#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"
#include "pb/server/jobs.hpp"

namespace pb::server {

struct RemoteJobStatus {
  JobState state = JobState::running;
  std::vector<Artifact> artifacts;
  std::string error;
};

void to_json(nlohmann::json& j, const RemoteJobStatus& s);
void from_json(const nlohmann::json& j, RemoteJobStatus& s);

/// The access server's view of one controller. Every call may throw
/// Errc::unreachable when the node does not answer.
class ControllerLink {
 public:
  virtual ~ControllerLink() = default;

  /// Probe: the controller's status document (node_id, devices, ...).
  virtual nlohmann::json status() = 0;
  virtual void start_job(const JobSpec& spec) = 0;
  virtual RemoteJobStatus job_status(const JobId& id) = 0;
  virtual void abort_job(const JobId& id) = 0;
  virtual void cleanup() = 0;
  virtual std::string fetch_artifact(const JobId& job, const std::string& name) = 0;
};

using LinkFactory = std::function<std::unique_ptr<ControllerLink>(const NodeId& id, const std::string& address)>;

/// Talks to a controller service over HTTP/JSON.
class HttpControllerLink final : public ControllerLink {
 public:
  explicit HttpControllerLink(std::string address, double timeout_s = 5.0);

  nlohmann::json status() override;
  void start_job(const JobSpec& spec) override;
  RemoteJobStatus job_status(const JobId& id) override;
  void abort_job(const JobId& id) override;
  void cleanup() override;
  std::string fetch_artifact(const JobId& job, const std::string& name) override;

 private:
  std::string host_;
  int port_ = 0;
  double timeout_s_;
};

LinkFactory http_link_factory(double timeout_s = 5.0);

/// Scripted stand-in for a controller: jobs finish after a set number of
/// status polls. State is shared so a test can flip reachability or attach
/// devices while the server holds the link.
class FakeNode : public std::enable_shared_from_this<FakeNode> {
 public:
  explicit FakeNode(NodeId id, std::vector<DeviceSummary> devices = {});

  void set_reachable(bool on);
  void set_devices(std::vector<DeviceSummary> devices);
  /// Polls a job needs before it reports `outcome` (default 1 and succeeded).
  void set_job_plan(int polls, JobState outcome = JobState::succeeded);
  /// Jobs this node currently runs; > 1 would break scheduler exclusion.
  int in_flight() const;
  int max_in_flight() const;
  int started() const;
  int cleanups() const;
  std::vector<JobId> started_order() const;

  std::unique_ptr<ControllerLink> link();

 private:
  friend class FakeLink;
  struct Job {
    int polls_left = 1;
    JobState outcome = JobState::succeeded;
    bool done = false;
  };

  mutable std::mutex mu_;
  NodeId id_;
  std::vector<DeviceSummary> devices_;
  bool reachable_ = true;
  int plan_polls_ = 1;
  JobState plan_outcome_ = JobState::succeeded;
  std::map<JobId, Job> jobs_;
  std::vector<JobId> order_;
  int in_flight_ = 0;
  int max_in_flight_ = 0;
  int cleanups_ = 0;
};

/// Factory over a fixed set of fake nodes; unknown ids get an unreachable link.
LinkFactory fake_link_factory(std::map<NodeId, std::shared_ptr<FakeNode>> nodes);

}  // namespace pb::server
