#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pb/common/error.hpp"

namespace pb::service {

int http_status(Errc code) noexcept;
std::optional<Errc> errc_from_string(std::string_view name) noexcept;

/// {"error": {"code": "...", "message": "..."}}
nlohmann::json error_body(Errc code, const std::string& message);

/// Rebuilds the Error a remote service reported. Falls back to the HTTP
/// status when the body carries no error document.
[[noreturn]] void throw_remote(int status, const std::string& body);

/// "host:port", "http://host:port" or ":port" -> host and port.
std::pair<std::string, int> split_address(std::string_view address, int default_port);

}  // namespace pb::service
