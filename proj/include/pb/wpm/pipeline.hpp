#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pb/controller/controller.hpp"
#include "pb/wpm/catalog.hpp"
#include "pb/wpm/stats.hpp"

namespace pb::wpm {

enum class Automation { simple_load, interact };

NLOHMANN_JSON_SERIALIZE_ENUM(Automation, {{Automation::simple_load, "simple_load"}, {Automation::interact, "interact"}})

inline constexpr double kCpuSamplePeriodS = 3.0;
inline constexpr int kInteractScrolls = 4;

struct WpmRequest {
  std::vector<std::string> urls;
  DeviceId device_id;
  AppId browser;
  int reps = 3;
  bool power = true;
  bool visual = false;
  Automation automation = Automation::simple_load;
  double per_page_budget_s = 30.0;
  double page_slot_s = 120.0;

  /// Throws Errc::validation.
  void validate() const;
};

void to_json(nlohmann::json& j, const WpmRequest& r);
void from_json(const nlohmann::json& j, WpmRequest& r);

struct LoadMetrics {
  int rep = 0;
  bool ok = true;
  std::string error;
  double window_start = 0.0;  ///< controller clock
  double window_end = 0.0;
  std::optional<double> energy_j;  ///< empty without power measurement
  double page_bytes = 0.0;
  std::vector<double> cpu_samples;
};

struct UrlResult {
  std::string url;
  std::vector<LoadMetrics> loads;
  int successful_reps = 0;
  bool failed = false;
  std::optional<double> median_energy_j;
  std::optional<double> median_page_bytes;
  std::optional<CpuPercentiles> cpu;  ///< per-percentile median across reps
};

struct WpmResult {
  WpmRequest request;
  std::vector<std::string> steps;
  std::vector<UrlResult> urls;
  std::vector<TraceId> trace_ids;
  double started_at = 0.0;
  double finished_at = 0.0;
  double session_started_at = 0.0;  ///< controller clock at trace sample 0
  std::optional<double> total_energy_j;
  std::optional<double> idle_energy_j;  ///< trace energy outside every load window
  bool ok = true;
  std::string error;
};

void to_json(nlohmann::json& j, const LoadMetrics& m);
void from_json(const nlohmann::json& j, LoadMetrics& m);
void to_json(nlohmann::json& j, const UrlResult& u);
void from_json(const nlohmann::json& j, UrlResult& u);
void to_json(nlohmann::json& j, const WpmResult& r);
void from_json(const nlohmann::json& j, WpmResult& r);

/// Medians, successful rep count and failure flag of one URL from its loads.
void aggregate(UrlResult& url);

/// node_setup -> device_setup -> reps x (browser_setup -> run_test) ->
/// cleanup. Each URL owns a fixed slot of page_slot_s; the page is loaded
/// and measured for the first per_page_budget_s of it. Cleanup runs even
/// when a step fails; the failure is reported in the result.
WpmResult run(controller::Controller& ctl, const WpmRequest& request, const Catalog& catalog);

}  // namespace pb::wpm
