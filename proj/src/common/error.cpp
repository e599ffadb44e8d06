#include "pb/common/error.hpp"

namespace pb {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::validation: return "validation";
    case Errc::not_found: return "not_found";
    case Errc::permission: return "permission";
    case Errc::state: return "state";
    case Errc::range: return "range";
    case Errc::safety: return "safety";
    case Errc::exclusivity: return "exclusivity";
    case Errc::routing: return "routing";
    case Errc::precondition: return "precondition";
    case Errc::encoding: return "encoding";
    case Errc::io: return "io";
    case Errc::unavailable: return "unavailable";
    case Errc::partial_delivery: return "partial_delivery";
    case Errc::bounds: return "bounds";
    case Errc::step_failed: return "step_failed";
    case Errc::unreachable: return "unreachable";
    case Errc::conflict: return "conflict";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace pb
