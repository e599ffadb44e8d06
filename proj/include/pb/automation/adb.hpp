#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pb/automation/command.hpp"

namespace pb::automation {

/// Shell line the ADB input tool understands. Text escapes shell
/// metacharacters with a backslash and encodes spaces as "%s"; control
/// characters, non-ASCII bytes and a literal "%s" raise Errc::encoding.
/// Wait has no shell form (the dispatcher sleeps) and raises Errc::validation.
std::string to_adb(const InputCommand& cmd);

std::string_view adb_keycode(NamedKey key) noexcept;

/// Minimal POSIX-shell word splitting: whitespace separation, backslash
/// escapes, single and double quotes.
std::vector<std::string> shell_split(std::string_view line);

/// Inverse of to_adb for the "input ..." and "monkey -p ..." forms.
/// Throws Errc::validation on anything else.
InputCommand parse_adb_input(std::string_view line);

}  // namespace pb::automation
