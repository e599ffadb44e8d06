#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pb/controller/controller.hpp"
#include "pb/replay/recording.hpp"
#include "pb/replay/script.hpp"
#include "pb/server/controller_link.hpp"
#include "pb/server/jobs.hpp"
#include "pb/wpm/catalog.hpp"

namespace pb::service {

struct ControllerNodeOptions {
  /// Sites the wpm step can load.
  wpm::Catalog catalog;
  /// Simulated seconds per wall second while no job runs; 0 leaves the
  /// clock to jobs and live input.
  double time_scale = 0.0;
};

/// Table 1 operations reachable as POST /<op>.
const std::vector<std::string>& controller_ops();
/// Step names a dispatched job may use: the Table 1 operations plus status,
/// wait (simulated seconds), sleep (wall seconds), wpm and replay.
const std::vector<std::string>& job_step_names();

nlohmann::json frame_json(const device::Frame& f);

/// Controller behind one lock plus a job runner. Direct operations are
/// refused while a dispatched job owns the node, except cleanup.
class ControllerNode {
 public:
  explicit ControllerNode(std::unique_ptr<controller::Controller> ctl, ControllerNodeOptions options = {});
  ~ControllerNode();
  ControllerNode(const ControllerNode&) = delete;
  ControllerNode& operator=(const ControllerNode&) = delete;

  const NodeId& node_id() const noexcept { return node_id_; }

  /// Controller status document plus "job": the running job id or null.
  nlohmann::json status();
  std::vector<DeviceSummary> devices();
  /// One Table 1 operation with JSON parameters.
  nlohmann::json call(std::string_view op, const nlohmann::json& params);

  // --- dispatched jobs -------------------------------------------------------
  /// Errc::exclusivity while another job runs, Errc::conflict for a reused id.
  void start_job(server::JobSpec spec);
  server::RemoteJobStatus job_status(const JobId& id);
  void abort_job(const JobId& id);
  /// Waits for the running job, false on timeout.
  bool wait_idle(double timeout_s);
  std::string artifact(const JobId& job, const std::string& name);

  /// Aborts a running job first.
  nlohmann::json cleanup();

  // --- traces, mirroring and console input --------------------------------------
  std::string trace_csv(const TraceId& id);
  nlohmann::json trace_metadata(const TraceId& id);
  /// Errc::unavailable while mirroring is off.
  device::Frame frame(const DeviceId& device);
  std::string open_input(const DeviceId& device);
  /// Records the batch and, when live, forwards it to the device as remote
  /// desktop input (mirroring must be on). With a manual clock the event
  /// gaps advance simulated time.
  std::size_t ingest(const std::string& session_id, const std::vector<replay::RecordedEvent>& events, bool live);
  replay::RecordingSession seal_input(const std::string& session_id);
  replay::RecordingSession input_session(const std::string& session_id);
  replay::CompileResult compile_input(const std::string& session_id);

  template <class F>
  auto with_controller(F&& f) {
    std::lock_guard lock(mu_);
    return f(*ctl_);
  }

 private:
  struct JobRecord {
    server::JobSpec spec;
    server::JobState state = server::JobState::running;
    std::string error;
    std::map<std::string, std::string> artifacts;
    bool abort = false;
  };

  void worker();
  void pacer();
  void run_job(const JobId& id);
  nlohmann::json run_step(JobRecord& job, const server::JobStep& step, std::vector<TraceId>& traces);
  void wait_sim(JobRecord& job, double seconds);
  void sleep_wall(JobRecord& job, double seconds);
  void check_abort(const JobRecord& job);
  void collect_traces(JobRecord& job, const std::vector<TraceId>& known);
  void require_idle_locked(std::string_view op) const;
  ScreenSize screen_locked(const DeviceId& device);

  NodeId node_id_;
  ControllerNodeOptions options_;
  std::unique_ptr<controller::Controller> ctl_;
  replay::RecordingStore recordings_;

  std::mutex mu_;  ///< controller and job table
  std::condition_variable cv_;
  std::map<JobId, JobRecord> jobs_;
  std::optional<JobId> running_;
  std::optional<JobId> pending_;
  std::map<std::string, std::int64_t> last_input_ms_;
  std::map<DeviceId, bool> pressed_;
  bool stop_ = false;
  std::thread worker_;
  std::thread pacer_;
};

/// Access-server link straight to an in-process node.
class LocalControllerLink final : public server::ControllerLink {
 public:
  explicit LocalControllerLink(std::shared_ptr<ControllerNode> node) : node_(std::move(node)) {}
  nlohmann::json status() override;
  void start_job(const server::JobSpec& spec) override;
  server::RemoteJobStatus job_status(const JobId& id) override;
  void abort_job(const JobId& id) override;
  void cleanup() override;
  std::string fetch_artifact(const JobId& job, const std::string& name) override;

 private:
  std::shared_ptr<ControllerNode> node_;
};

server::LinkFactory local_link_factory(std::map<NodeId, std::shared_ptr<ControllerNode>> nodes);

}  // namespace pb::service
