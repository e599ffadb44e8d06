#include "pb/trace/analysis.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pb/common/error.hpp"
#include "pb/trace/kernels.hpp"

namespace pb::trace {

namespace {

void require_sealed(const PowerTrace& trace) {
  if (!trace.sealed()) throw Error(Errc::state, "trace " + trace.id() + " is not sealed");
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(Errc::validation, "csv line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

double energy(const PowerTrace& trace) {
  require_sealed(trace);
  return energy_between(trace, 0, trace.size());
}

double energy_between(const PowerTrace& trace, std::size_t first, std::size_t last) {
  require_sealed(trace);
  last = std::min(last, trace.size());
  if (last <= first) return 0.0;
  const double sum_ma = kernels::compensated_sum(trace.currents().subspan(first, last - first));
  return trace.voltage() * (sum_ma / 1000.0) * trace.sample_period();
}

double energy_in_window(const PowerTrace& trace, double t0, double t1) {
  return energy_between(trace, trace.index_at_or_after(t0), trace.index_at_or_after(t1));
}

std::vector<Bucket> downsample(const PowerTrace& trace, double period_s) {
  const double rate = trace.sample_rate();
  if (!(period_s >= 2.0 / rate - 1e-12)) {
    throw Error(Errc::validation, "downsample period must be at least two sample periods");
  }
  const std::size_t n = trace.size();
  std::vector<std::size_t> bounds{0};
  std::vector<bool> partial;
  for (std::size_t b = 1; bounds.back() < n; ++b) {
    const double nominal_end = static_cast<double>(b) * period_s * rate;
    const auto end = static_cast<std::size_t>(std::ceil(nominal_end - 1e-6));
    bounds.push_back(std::min(end, n));
    partial.push_back(nominal_end > static_cast<double>(n) + 1e-6);
  }

  const auto means = kernels::range_means(trace.currents(), bounds);
  std::vector<Bucket> out;
  out.reserve(means.size());
  for (std::size_t b = 0; b < means.size(); ++b) {
    const std::size_t count = bounds[b + 1] - bounds[b];
    out.push_back({static_cast<double>(b) * period_s, static_cast<double>(count) / rate, means[b], count, partial[b]});
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Relative guard: values that differ only by rounding count as constant.
  const double scale_x = std::max(1.0, mx * mx) * n * 1e-20;
  const double scale_y = std::max(1.0, my * my) * n * 1e-20;
  if (sxx <= scale_x || syy <= scale_y) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

ComparisonReport compare_software(const PowerTrace& trace, const SoftwareReadingSeries& series) {
  if (!(series.cadence_s > 0.0)) throw Error(Errc::validation, "cadence must be positive");
  ComparisonReport report;
  std::vector<double> readings, means;
  for (const auto& r : series.readings) {
    const double start = std::max(0.0, r.t - series.cadence_s);
    const double end = std::min(trace.duration(), r.t);
    const std::size_t first = trace.index_at_or_after(start);
    const std::size_t last = trace.index_at_or_after(end);
    if (last <= first) continue;
    const double mean =
        kernels::compensated_sum(trace.currents().subspan(first, last - first)) / static_cast<double>(last - first);
    const double err = mean == 0.0 ? (r.current_ma == 0.0 ? 0.0 : INFINITY) : std::abs(r.current_ma - mean) / mean;
    report.windows.push_back({start, end, r.current_ma, mean, err});
    report.max_relative_error = std::max(report.max_relative_error, err);
    readings.push_back(r.current_ma);
    means.push_back(mean);
  }
  if (report.windows.empty()) {
    throw Error(Errc::validation, "software series does not overlap trace " + trace.id());
  }
  report.trend_correlation = pearson(readings, means);
  return report;
}

std::string to_csv(const PowerTrace& trace) {
  require_sealed(trace);
  std::string out = "t_s,current_mA,voltage_V\n";
  out.reserve(out.size() + trace.size() * 28);
  char line[96];
  const auto currents = trace.currents();
  for (std::size_t i = 0; i < currents.size(); ++i) {
    const int len = std::snprintf(line, sizeof line, "%.6f,%.3f,%.3f\n", trace.time_at(i), currents[i], trace.voltage());
    out.append(line, static_cast<std::size_t>(len));
  }
  return out;
}

std::size_t export_csv(const PowerTrace& trace, const std::filesystem::path& path) {
  const std::string text = to_csv(trace);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error(Errc::io, "write failed for " + path.string());
  return text.size();
}

PowerTrace parse_csv(std::string_view text, TraceId id, std::optional<double> sample_rate) {
  std::vector<double> times, currents;
  double voltage = 0.0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "t_s,current_mA,voltage_V") throw Error(Errc::validation, "unexpected csv header");
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string_view::npos ? c1 : c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
      throw Error(Errc::validation, "csv line " + std::to_string(line_no) + ": expected three fields");
    }
    times.push_back(parse_double(line.substr(0, c1), line_no));
    currents.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1), line_no));
    voltage = parse_double(line.substr(c2 + 1), line_no);
  }

  double rate = sample_rate.value_or(5000.0);
  if (!sample_rate && times.size() >= 2) rate = 1.0 / (times[1] - times[0]);
  PowerTrace trace(std::move(id), voltage, rate);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - trace.time_at(i)) > 0.5 / rate) {
      throw Error(Errc::validation, "csv row " + std::to_string(i) + " breaks the fixed sample spacing");
    }
    trace.append(currents[i]);
  }
  trace.seal();
  return trace;
}

PowerTrace import_csv(const std::filesystem::path& path, TraceId id, std::optional<double> sample_rate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_csv(buffer.str(), std::move(id), sample_rate);
}

nlohmann::json metadata_json(const PowerTrace& trace) {
  nlohmann::json j;
  j["trace_id"] = trace.id();
  j["device_id"] = trace.metadata().device_id;
  j["job_id"] = trace.metadata().job_id;
  j["started_at"] = trace.metadata().started_at;
  j["voltage_V"] = trace.voltage();
  j["sample_rate_Hz"] = trace.sample_rate();
  j["sample_count"] = trace.size();
  j["sealed"] = trace.sealed();
  j["faulted"] = trace.faulted();
  if (trace.faulted()) j["fault"] = trace.fault_reason();
  return j;
}

}  // namespace pb::trace
