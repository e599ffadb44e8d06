#include "pb/service/http_util.hpp"

#include <charconv>

namespace pb::service {

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::validation:
    case Errc::encoding:
    case Errc::range:
    case Errc::bounds: return 400;
    case Errc::permission: return 403;
    case Errc::not_found: return 404;
    case Errc::state:
    case Errc::exclusivity:
    case Errc::precondition:
    case Errc::safety:
    case Errc::conflict: return 409;
    case Errc::routing:
    case Errc::partial_delivery:
    case Errc::step_failed: return 422;
    case Errc::io: return 500;
    case Errc::unreachable: return 502;
    case Errc::unavailable: return 503;
  }
  return 500;
}

std::optional<Errc> errc_from_string(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(Errc::conflict); ++i) {
    const auto c = static_cast<Errc>(i);
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

nlohmann::json error_body(Errc code, const std::string& message) {
  return {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

void throw_remote(int status, const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_object() && doc.contains("error") && doc["error"].is_object()) {
    const auto code = errc_from_string(doc["error"].value("code", ""));
    auto message = doc["error"].value("message", std::string{});
    // the remote message already carries its "code: " prefix
    if (code) {
      const auto prefix = std::string(to_string(*code)) + ": ";
      if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
      throw Error(*code, message);
    }
  }
  if (status == 404) throw Error(Errc::not_found, "remote resource not found");
  if (status == 403 || status == 401) throw Error(Errc::permission, "remote refused the request");
  throw Error(Errc::io, "remote answered HTTP " + std::to_string(status));
}

std::pair<std::string, int> split_address(std::string_view address, int default_port) {
  std::string_view s = address;
  if (auto p = s.find("://"); p != std::string_view::npos) s.remove_prefix(p + 3);
  while (!s.empty() && s.back() == '/') s.remove_suffix(1);
  std::string host(s);
  int port = default_port;
  if (auto p = s.rfind(':'); p != std::string_view::npos) {
    host = std::string(s.substr(0, p));
    const auto digits = s.substr(p + 1);
    int v = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || end != digits.data() + digits.size() || v <= 0 || v > 65535) {
      throw Error(Errc::validation, "bad port in address '" + std::string(address) + "'");
    }
    port = v;
  }
  if (host.empty()) host = "127.0.0.1";
  return {host, port};
}

}  // namespace pb::service
