#include "pb/server/auth.hpp"

#include <fstream>

#include "pb/common/error.hpp"

namespace pb::server {

void require_role(const Principal& who, std::initializer_list<Role> roles, std::string_view action) {
  for (Role r : roles) {
    if (who.role == r) return;
  }
  throw Error(Errc::permission, "'" + who.id + "' (" + nlohmann::json(who.role).get<std::string>() +
                                    ") may not " + std::string(action));
}

void TokenStore::add(std::string token, Principal principal) {
  if (token.empty()) throw Error(Errc::validation, "empty token");
  tokens_[std::move(token)] = std::move(principal);
}

std::optional<Principal> TokenStore::find(std::string_view token) const {
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

TokenStore TokenStore::parse(const nlohmann::json& doc) {
  TokenStore store;
  try {
    for (const auto& t : doc.at("tokens")) {
      const auto role = t.at("role").get<std::string>();
      if (role != "administrator" && role != "experimenter" && role != "tester") {
        throw Error(Errc::validation, "unknown role '" + role + "'");
      }
      store.add(t.at("token").get<std::string>(), Principal{t.at("id").get<std::string>(), t["role"].get<Role>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, std::string("bad token file: ") + e.what());
  }
  return store;
}

TokenStore TokenStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open token file " + path.string());
  try {
    return parse(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::validation, std::string("token file is not JSON: ") + e.what());
  }
}

}  // namespace pb::server
