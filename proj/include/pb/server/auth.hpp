#pragma once

#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace pb::server {

enum class Role { administrator, experimenter, tester };

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::administrator, "administrator"},
                                    {Role::experimenter, "experimenter"},
                                    {Role::tester, "tester"}})

struct Principal {
  std::string id;
  Role role = Role::experimenter;
};

/// Errc::permission unless the principal holds one of the roles.
void require_role(const Principal& who, std::initializer_list<Role> roles, std::string_view action);

/// Bearer tokens -> principals. File format:
/// {"tokens": [{"token": "...", "id": "alice", "role": "experimenter"}]}.
class TokenStore {
 public:
  void add(std::string token, Principal principal);
  std::optional<Principal> find(std::string_view token) const;
  bool empty() const noexcept { return tokens_.empty(); }

  static TokenStore load(const std::filesystem::path& path);
  static TokenStore parse(const nlohmann::json& doc);

 private:
  std::map<std::string, Principal, std::less<>> tokens_;
};

}  // namespace pb::server
