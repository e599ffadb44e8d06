#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "pb/trace/power_trace.hpp"
#include "pb/wpm/pipeline.hpp"

namespace pb::wpm {

inline constexpr double kDisplayPeriodS = 0.1;

/// "json": the result plus plot series (current per load at
/// display_period_s, median energy per URL, CPU percentile boxes).
/// "csv": one row per URL. Errc::validation for any other format.
std::string report(const WpmResult& result, const trace::PowerTrace* session_trace, std::string_view format,
                   double display_period_s = kDisplayPeriodS);

nlohmann::json report_json(const WpmResult& result, const trace::PowerTrace* session_trace,
                           double display_period_s = kDisplayPeriodS);

}  // namespace pb::wpm
