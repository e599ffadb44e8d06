#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace pb {

/// Error categories surfaced by every module. HTTP layers map these onto
/// status codes, so keep the list in sync with service/http_util.cpp.
enum class Errc {
  validation,
  not_found,
  permission,
  state,
  range,
  safety,
  exclusivity,
  routing,
  precondition,
  encoding,
  io,
  unavailable,
  partial_delivery,
  bounds,
  step_failed,
  unreachable,
  conflict,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised when a multi-report/multi-command delivery stops part way.
class PartialDeliveryError : public Error {
 public:
  PartialDeliveryError(std::size_t delivered, const std::string& message)
      : Error(Errc::partial_delivery, message), delivered_(delivered) {}

  std::size_t delivered() const noexcept { return delivered_; }

 private:
  std::size_t delivered_;
};

/// Raised by multi-step control jobs; names the step that failed.
class StepError : public Error {
 public:
  StepError(std::string step, const std::string& message)
      : Error(Errc::step_failed, message), step_(std::move(step)) {}

  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

}  // namespace pb
