#include "pb/wpm/report.hpp"

#include <cmath>
#include <sstream>

#include "pb/common/error.hpp"
#include "pb/trace/kernels.hpp"

namespace pb::wpm {

namespace {

using nlohmann::json;

json load_series(const trace::PowerTrace& trace, double t0, const LoadMetrics& l, double period) {
  std::vector<std::size_t> bounds;
  std::vector<double> t;
  const double rel0 = l.window_start - t0;
  const double rel1 = l.window_end - t0;
  const auto n = static_cast<std::size_t>(std::ceil((rel1 - rel0) / period - 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    bounds.push_back(trace.index_at_or_after(std::min(rel0 + static_cast<double>(k) * period, rel1)));
    if (k < n) t.push_back(static_cast<double>(k) * period);
  }
  return {{"rep", l.rep}, {"t", t}, {"current_ma", trace::kernels::range_means(trace.currents(), bounds)}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

}  // namespace

json report_json(const WpmResult& result, const trace::PowerTrace* session_trace, double display_period_s) {
  if (session_trace && !(display_period_s >= 2.0 / session_trace->sample_rate() - 1e-12)) {
    throw Error(Errc::validation, "display period must be at least two sample periods");
  }
  json current = json::array();
  json energy = json::array();
  json boxes = json::array();
  for (const auto& u : result.urls) {
    if (session_trace) {
      json loads = json::array();
      for (const auto& l : u.loads) {
        loads.push_back(load_series(*session_trace, session_trace->metadata().started_at, l, display_period_s));
      }
      current.push_back({{"url", u.url}, {"loads", loads}});
    }
    if (u.failed) continue;
    if (u.median_energy_j) energy.push_back({{"url", u.url}, {"energy_j", *u.median_energy_j}});
    if (u.cpu) boxes.push_back({{"url", u.url}, {"p25", u.cpu->p25}, {"p50", u.cpu->p50}, {"p75", u.cpu->p75}});
  }
  return {{"result", result},
          {"series",
           {{"period_s", display_period_s},
            {"current", current},
            {"energy_per_url", energy},
            {"cpu_boxes", boxes}}}};
}

std::string report(const WpmResult& result, const trace::PowerTrace* session_trace, std::string_view format,
                   double display_period_s) {
  if (format == "json") return report_json(result, session_trace, display_period_s).dump(1);
  if (format == "csv") {
    std::string out = "url,failed,successful_reps,median_energy_j,median_page_bytes,cpu_p25,cpu_p50,cpu_p75\n";
    for (const auto& u : result.urls) {
      out += csv_field(u.url) + "," + (u.failed ? "true" : "false") + "," + std::to_string(u.successful_reps) + ",";
      out += csv_number(u.median_energy_j) + "," + csv_number(u.median_page_bytes) + ",";
      out += csv_number(u.cpu ? std::optional(u.cpu->p25) : std::nullopt) + ",";
      out += csv_number(u.cpu ? std::optional(u.cpu->p50) : std::nullopt) + ",";
      out += csv_number(u.cpu ? std::optional(u.cpu->p75) : std::nullopt) + "\n";
    }
    return out;
  }
  throw Error(Errc::validation, "unknown report format '" + std::string(format) + "'");
}

}  // namespace pb::wpm
