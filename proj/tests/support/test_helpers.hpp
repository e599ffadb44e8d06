#pragma once

#include <catch_amalgamated.hpp>

#include <functional>
#include <string>
#include <vector>

#include "pb/common/error.hpp"
#include "pb/trace/power_trace.hpp"

namespace pbtest {

inline pb::trace::PowerTrace sealed_trace(const std::vector<double>& currents, double rate = 5000.0,
                                          double voltage = 4.0, const std::string& id = "t") {
  pb::trace::PowerTrace t(id, voltage, rate);
  for (double c : currents) t.append(c);
  t.seal();
  return t;
}

inline pb::trace::PowerTrace sampled_trace(const std::function<double(double)>& f, double seconds,
                                           double rate = 5000.0, double voltage = 4.0) {
  pb::trace::PowerTrace t("f", voltage, rate);
  const auto n = static_cast<std::size_t>(seconds * rate + 0.5);
  for (std::size_t i = 0; i < n; ++i) t.append(f(static_cast<double>(i) / rate));
  t.seal();
  return t;
}

/// Runs fn and returns the Errc it threw; fails the test if nothing was thrown.
template <class F>
pb::Errc error_code_of(F&& fn) {
  try {
    fn();
  } catch (const pb::Error& e) {
    return e.code();
  }
  FAIL("expected a pb::Error");
  return pb::Errc::validation;
}

}  // namespace pbtest
