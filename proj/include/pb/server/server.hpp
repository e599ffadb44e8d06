#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/server/auth.hpp"
#include "pb/server/clock.hpp"
#include "pb/server/controller_link.hpp"
#include "pb/server/jobs.hpp"
#include "pb/server/registry.hpp"

namespace pb::server {

struct ServerOptions {
  std::string zone{kDefaultZone};
  double refresh_period_s = 1800.0;
  /// events.jsonl, registry.json and collected artifacts; nothing persisted
  /// when empty.
  std::optional<std::filesystem::path> state_dir;
};

struct DeviceListing {
  std::vector<DeviceSummary> devices;
  bool stale = true;
};

struct SessionGrant {
  JobId job_id;
  NodeId vantage_id;
  std::string address;
  std::optional<DeviceId> device_id;
};

/// Registry, job queue and dispatcher. Thread-safe. Job and registry state
/// change under one lock; link calls run outside it, serialised per node.
class AccessServer {
 public:
  AccessServer(ServerOptions options, std::shared_ptr<const Clock> clock, LinkFactory links);
  ~AccessServer();

  const ServerOptions& options() const noexcept { return options_; }

  // --- registry ------------------------------------------------------------
  /// Re-registration with the same credential updates the address only and
  /// keeps the DNS name. A new node gets a provisioning job.
  VantagePointRecord register_vantage_point(const Principal& caller, const NodeId& id, const std::string& address,
                                            const std::string& credential, const std::string& location = {},
                                            const std::set<std::string>& labels = {});
  void remove_vantage_point(const Principal& caller, const NodeId& id);
  std::vector<VantagePointRecord> list_nodes(const std::optional<std::string>& label = std::nullopt,
                                             const std::optional<NodeState>& state = std::nullopt) const;
  VantagePointRecord node(const NodeId& id) const;
  DeviceListing list_devices(const NodeId& id) const;

  // --- jobs ----------------------------------------------------------------
  JobId submit_job(JobSpec spec, const Principal& caller);
  JobExecution job(const JobId& id) const;
  std::vector<JobExecution> jobs() const;
  /// Owner or administrator; queued jobs abort at once, running ones are
  /// stopped on the node and followed by a cleanup.
  JobExecution abort_job(const Principal& caller, const JobId& id);
  /// Content of a collected artifact; fetched from the node when missing.
  std::string artifact(const JobId& id, const std::string& name);

  /// Dispatches the oldest satisfiable queued job to every idle online node.
  std::vector<JobId> schedule();
  /// Polls dispatched jobs, collects finished ones, aborts overdue ones.
  void poll();
  /// poll() then schedule().
  std::vector<JobId> tick();
  /// Probes every node; returns and persists the registry snapshot.
  nlohmann::json refresh();
  nlohmann::json registry_snapshot() const;
  /// Times at which refresh() is due, for the background loop.
  double next_refresh_at() const;

  // --- tester sharing --------------------------------------------------------
  /// The job owner lets a tester attach to the job's remote-control session
  /// for as long as the job runs.
  void share_session(const Principal& owner, const JobId& id, const std::string& tester_id);
  SessionGrant attach(const Principal& tester, const JobId& id) const;

  /// Non-terminal jobs seen on one node at once, counted at every
  /// transition; stays 0 unless the dispatcher is broken.
  std::size_t exclusion_violations() const noexcept { return violations_.load(); }

 private:
  struct NodeSlot {
    VantagePointRecord record;
    std::string credential;
    std::shared_ptr<ControllerLink> link;
    std::shared_ptr<std::mutex> call_mu = std::make_shared<std::mutex>();
    std::optional<JobId> active_job;
  };

  void transition_locked(JobExecution& job, JobState to, const std::string& error = {});
  bool satisfies_locked(const NodeSlot& node, const JobSpec& spec) const;
  bool stale_locked(const NodeSlot& node) const;
  VantagePointRecord view_locked(const NodeSlot& node) const;
  void log_event_locked(nlohmann::json event);
  void persist_registry_locked() const;
  void recover();
  void collect_artifacts(const JobId& id, ControllerLink& link, const std::vector<Artifact>& artifacts);
  void apply_event(const nlohmann::json& e);
  JobId enqueue_locked(JobSpec spec);

  ServerOptions options_;
  std::shared_ptr<const Clock> clock_;
  LinkFactory links_;

  mutable std::mutex mu_;
  std::map<NodeId, NodeSlot> nodes_;
  std::map<JobId, JobExecution> jobs_;
  std::vector<JobId> queue_;  ///< submission order
  std::map<NodeId, int> active_count_;
  std::map<JobId, std::set<std::string>> grants_;
  std::uint64_t job_counter_ = 0;
  std::uint64_t event_seq_ = 0;
  double last_refresh_ = 0.0;
  bool recovering_ = false;
  std::atomic<std::size_t> violations_{0};
};

}  // namespace pb::server
