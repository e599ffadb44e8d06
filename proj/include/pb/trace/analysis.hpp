#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "pb/trace/power_trace.hpp"

namespace pb::trace {

/// Joules: V * sum(I_i / 1000) * dt with compensated accumulation.
/// Requires a sealed trace.
double energy(const PowerTrace& trace);

/// Energy of samples [first, last). Requires a sealed trace.
double energy_between(const PowerTrace& trace, std::size_t first, std::size_t last);

/// Energy of samples whose timestamps fall in [t0, t1).
double energy_in_window(const PowerTrace& trace, double t0, double t1);

struct Bucket {
  double t = 0.0;        ///< bucket start, seconds
  double width_s = 0.0;  ///< covered time: sample count / sample rate
  double mean_ma = 0.0;
  std::size_t count = 0;
  bool partial = false;
};

/// Contiguous buckets of `period_s`; the tail bucket is kept and flagged
/// partial when the trace ends inside it.
std::vector<Bucket> downsample(const PowerTrace& trace, double period_s);

struct SoftwareReading {
  double t = 0.0;  ///< report time; the reading summarises [t - cadence, t)
  double current_ma = 0.0;
};

struct SoftwareReadingSeries {
  double cadence_s = 30.0;
  std::vector<SoftwareReading> readings;
};

struct ComparisonWindow {
  double start = 0.0;
  double end = 0.0;
  double reading_ma = 0.0;
  double window_mean_ma = 0.0;
  double relative_error = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonWindow> windows;
  /// Pearson coefficient between readings and window means; empty when
  /// either side has zero variance or fewer than two windows exist.
  std::optional<double> trend_correlation;
  double max_relative_error = 0.0;
};

ComparisonReport compare_software(const PowerTrace& trace, const SoftwareReadingSeries& series);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// CSV export: header "t_s,current_mA,voltage_V", t to 6 places, current
/// and voltage to 3. Returns the number of bytes written.
std::size_t export_csv(const PowerTrace& trace, const std::filesystem::path& path);
std::string to_csv(const PowerTrace& trace);

/// Parses a CSV produced by export_csv. The sample rate is inferred from the
/// timestamps unless given; header-only files need it (default 5000 Hz).
PowerTrace import_csv(const std::filesystem::path& path, TraceId id = "imported",
                      std::optional<double> sample_rate = std::nullopt);
PowerTrace parse_csv(std::string_view text, TraceId id = "imported",
                     std::optional<double> sample_rate = std::nullopt);

/// JSON sidecar: trace_id, device, job, voltage, rate, sample count.
nlohmann::json metadata_json(const PowerTrace& trace);

}  // namespace pb::trace
