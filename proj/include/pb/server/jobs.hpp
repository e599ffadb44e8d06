#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pb/common/types.hpp"

namespace pb::server {

enum class JobKind { experiment, control };
enum class JobState { queued, dispatched, running, succeeded, failed, aborted };

NLOHMANN_JSON_SERIALIZE_ENUM(JobKind, {{JobKind::experiment, "experiment"}, {JobKind::control, "control"}})
NLOHMANN_JSON_SERIALIZE_ENUM(JobState, {{JobState::queued, "queued"},
                                        {JobState::dispatched, "dispatched"},
                                        {JobState::running, "running"},
                                        {JobState::succeeded, "succeeded"},
                                        {JobState::failed, "failed"},
                                        {JobState::aborted, "aborted"}})

std::string_view to_string(JobState s) noexcept;
bool is_terminal(JobState s) noexcept;
/// queued -> dispatched -> running -> {succeeded, failed, aborted};
/// queued -> aborted; dispatched -> {failed, aborted} when delivery fails.
bool legal_transition(JobState from, JobState to) noexcept;

struct JobStep {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const JobStep&) const = default;
};

struct JobConstraints {
  std::optional<DeviceId> device_id;
  std::optional<NodeId> vantage_id;
  std::set<std::string> labels;

  bool operator==(const JobConstraints&) const = default;
};

struct JobSpec {
  JobId job_id;  ///< assigned on submission
  JobKind kind = JobKind::experiment;
  JobConstraints constraints;
  std::vector<JobStep> steps;
  double max_duration_s = 3600.0;
  std::string owner;

  /// Throws Errc::validation.
  void validate() const;
  bool operator==(const JobSpec&) const = default;
};

struct Artifact {
  std::string name;
  std::string ref;  ///< "trace:<id>" for power traces, "job:<id>" otherwise

  bool operator==(const Artifact&) const = default;
};

struct JobExecution {
  JobSpec spec;
  NodeId vantage_id;
  JobState state = JobState::queued;
  double submitted_at = 0.0;
  std::optional<double> started_at;
  std::optional<double> finished_at;
  std::vector<Artifact> artifacts;
  std::string error;
  std::uint64_t seq = 0;  ///< submission order
};

void to_json(nlohmann::json& j, const JobStep& s);
void from_json(const nlohmann::json& j, JobStep& s);
void to_json(nlohmann::json& j, const JobConstraints& c);
void from_json(const nlohmann::json& j, JobConstraints& c);
void to_json(nlohmann::json& j, const JobSpec& s);
/// Throws Errc::validation on malformed documents.
void from_json(const nlohmann::json& j, JobSpec& s);
void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);
void to_json(nlohmann::json& j, const JobExecution& e);
void from_json(const nlohmann::json& j, JobExecution& e);

}  // namespace pb::server
