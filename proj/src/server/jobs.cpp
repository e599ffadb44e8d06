#include "pb/server/jobs.hpp"

#include <cmath>

#include "pb/common/error.hpp"

namespace pb::server {

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

}  // namespace

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::dispatched: return "dispatched";
    case JobState::running: return "running";
    case JobState::succeeded: return "succeeded";
    case JobState::failed: return "failed";
    case JobState::aborted: return "aborted";
  }
  return "unknown";
}

bool is_terminal(JobState s) noexcept {
  return s == JobState::succeeded || s == JobState::failed || s == JobState::aborted;
}

bool legal_transition(JobState from, JobState to) noexcept {
  switch (from) {
    case JobState::queued: return to == JobState::dispatched || to == JobState::aborted;
    case JobState::dispatched:
      return to == JobState::running || to == JobState::failed || to == JobState::aborted;
    case JobState::running: return is_terminal(to);
    default: return false;
  }
}

void JobSpec::validate() const {
  if (steps.empty()) throw Error(Errc::validation, "job has no steps");
  for (const auto& s : steps) {
    if (s.name.empty()) throw Error(Errc::validation, "job step without a name");
    if (!s.params.is_object()) throw Error(Errc::validation, "step '" + s.name + "' params must be an object");
  }
  if (!(max_duration_s > 0.0) || !std::isfinite(max_duration_s)) {
    throw Error(Errc::validation, "max_duration_s must be positive");
  }
  if (constraints.device_id && constraints.vantage_id) {
    throw Error(Errc::validation, "set at most one of device_id and vantage_id");
  }
}

void to_json(json& j, const JobStep& s) { j = {{"name", s.name}, {"params", s.params}}; }

void from_json(const json& j, JobStep& s) {
  s.name = j.at("name").get<std::string>();
  s.params = j.value("params", json::object());
}

void to_json(json& j, const JobConstraints& c) {
  j = {{"device_id", opt(c.device_id)}, {"vantage_id", opt(c.vantage_id)}, {"labels", c.labels}};
}

void from_json(const json& j, JobConstraints& c) {
  c.device_id = opt_from<std::string>(j, "device_id");
  c.vantage_id = opt_from<std::string>(j, "vantage_id");
  c.labels = j.value("labels", std::set<std::string>{});
}

void to_json(json& j, const JobSpec& s) {
  j = {{"job_id", s.job_id},     {"kind", s.kind},
       {"constraints", s.constraints}, {"steps", s.steps},
       {"max_duration_s", s.max_duration_s}, {"owner", s.owner}};
}

void from_json(const json& j, JobSpec& s) {
  try {
    s.job_id = j.value("job_id", std::string{});
    if (j.contains("kind")) {
      const auto k = j["kind"].get<std::string>();
      if (k != "experiment" && k != "control") throw Error(Errc::validation, "unknown job kind '" + k + "'");
      s.kind = j["kind"].get<JobKind>();
    }
    s.constraints = j.value("constraints", JobConstraints{});
    s.steps = j.at("steps").get<std::vector<JobStep>>();
    s.max_duration_s = j.value("max_duration_s", 3600.0);
    s.owner = j.value("owner", std::string{});
  } catch (const json::exception& e) {
    throw Error(Errc::validation, std::string("bad job spec: ") + e.what());
  }
}

void to_json(json& j, const Artifact& a) { j = {{"name", a.name}, {"ref", a.ref}}; }

void from_json(const json& j, Artifact& a) {
  a.name = j.at("name").get<std::string>();
  a.ref = j.value("ref", std::string{});
}

void to_json(json& j, const JobExecution& e) {
  j = {{"job_id", e.spec.job_id},
       {"spec", e.spec},
       {"vantage_id", e.vantage_id.empty() ? json(nullptr) : json(e.vantage_id)},
       {"state", e.state},
       {"submitted_at", e.submitted_at},
       {"started_at", opt(e.started_at)},
       {"finished_at", opt(e.finished_at)},
       {"artifacts", e.artifacts},
       {"error", e.error.empty() ? json(nullptr) : json(e.error)},
       {"seq", e.seq}};
}

void from_json(const json& j, JobExecution& e) {
  e.spec = j.at("spec").get<JobSpec>();
  e.vantage_id = opt_from<std::string>(j, "vantage_id").value_or("");
  e.state = j.at("state").get<JobState>();
  e.submitted_at = j.at("submitted_at").get<double>();
  e.started_at = opt_from<double>(j, "started_at");
  e.finished_at = opt_from<double>(j, "finished_at");
  e.artifacts = j.value("artifacts", std::vector<Artifact>{});
  e.error = opt_from<std::string>(j, "error").value_or("");
  e.seq = j.value("seq", std::uint64_t{0});
}

}  // namespace pb::server
