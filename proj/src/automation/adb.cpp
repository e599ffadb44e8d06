#include "pb/automation/adb.hpp"

#include <charconv>
#include <cctype>
#include <cstdio>

#include "pb/common/error.hpp"

namespace pb::automation {

namespace {

constexpr std::string_view kShellMeta = "\\'\"()&<>;|*~$`?[]{}#!";
constexpr std::string_view kLauncher = "android.intent.category.LAUNCHER";

std::string escape_text(const std::string& text) {
  if (text.find("%s") != std::string::npos) {
    throw Error(Errc::encoding, "text contains a literal \"%s\", which the input tool reads as a space");
  }
  std::string out;
  out.reserve(text.size() + 8);
  for (unsigned char c : text) {
    if (c < 0x20 || c >= 0x7f) {
      char hex[8];
      std::snprintf(hex, sizeof hex, "0x%02x", c);
      throw Error(Errc::encoding, std::string("unescapable character ") + hex + " in text");
    }
    if (c == ' ') {
      out += "%s";
    } else {
      if (kShellMeta.find(static_cast<char>(c)) != std::string_view::npos) out += '\\';
      out += static_cast<char>(c);
    }
  }
  return out;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::validation, "expected integer, got '" + s + "'");
  }
  return v;
}

NamedKey key_from_adb(const std::string& token) {
  for (auto k : {NamedKey::enter, NamedKey::tab, NamedKey::backspace, NamedKey::back, NamedKey::home}) {
    if (adb_keycode(k) == token) return k;
  }
  // numeric forms accepted by the input tool
  if (token == "66") return NamedKey::enter;
  if (token == "61") return NamedKey::tab;
  if (token == "67") return NamedKey::backspace;
  if (token == "4") return NamedKey::back;
  if (token == "3") return NamedKey::home;
  throw Error(Errc::validation, "unsupported keyevent '" + token + "'");
}

std::string decode_text(const std::string& word) {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word[i] == '%' && i + 1 < word.size() && word[i + 1] == 's') {
      out += ' ';
      ++i;
    } else {
      out += word[i];
    }
  }
  return out;
}

}  // namespace

std::string_view adb_keycode(NamedKey key) noexcept {
  switch (key) {
    case NamedKey::enter: return "KEYCODE_ENTER";
    case NamedKey::tab: return "KEYCODE_TAB";
    case NamedKey::backspace: return "KEYCODE_DEL";
    case NamedKey::back: return "KEYCODE_BACK";
    case NamedKey::home: return "KEYCODE_HOME";
  }
  return "KEYCODE_ENTER";
}

std::string to_adb(const InputCommand& cmd) {
  validate(cmd);
  if (const auto* c = std::get_if<Tap>(&cmd)) {
    return "input tap " + std::to_string(c->x) + " " + std::to_string(c->y);
  }
  if (const auto* c = std::get_if<Swipe>(&cmd)) {
    return "input swipe " + std::to_string(c->x1) + " " + std::to_string(c->y1) + " " + std::to_string(c->x2) + " " +
           std::to_string(c->y2) + " " + std::to_string(c->duration_ms);
  }
  if (const auto* c = std::get_if<Text>(&cmd)) return "input text " + escape_text(c->text);
  if (const auto* c = std::get_if<Key>(&cmd)) return "input keyevent " + std::string(adb_keycode(c->key));
  if (const auto* c = std::get_if<LaunchApp>(&cmd)) {
    for (char ch : c->app_id) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_')) {
        throw Error(Errc::encoding, "app id '" + c->app_id + "' is not a package name");
      }
    }
    return "monkey -p " + c->app_id + " -c " + std::string(kLauncher) + " 1";
  }
  throw Error(Errc::validation, "wait has no adb form");
}

std::vector<std::string> shell_split(std::string_view line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
      continue;
    }
    in_word = true;
    if (c == '\\') {
      if (++i >= line.size()) throw Error(Errc::validation, "dangling backslash");
      cur += line[i];
    } else if (c == '\'') {
      const auto end = line.find('\'', i + 1);
      if (end == std::string_view::npos) throw Error(Errc::validation, "unterminated single quote");
      cur.append(line.substr(i + 1, end - i - 1));
      i = end;
    } else if (c == '"') {
      for (++i; i < line.size() && line[i] != '"'; ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) ++i;
        cur += line[i];
      }
      if (i >= line.size()) throw Error(Errc::validation, "unterminated double quote");
    } else {
      cur += c;
    }
  }
  if (in_word) words.push_back(std::move(cur));
  return words;
}

InputCommand parse_adb_input(std::string_view line) {
  const auto w = shell_split(line);
  if (w.size() >= 3 && w[0] == "monkey" && w[1] == "-p") {
    return LaunchApp{w[2]};
  }
  if (w.size() < 2 || w[0] != "input") throw Error(Errc::validation, "not an input command: " + std::string(line));
  const auto& verb = w[1];
  if (verb == "tap" && w.size() == 4) return Tap{parse_int(w[2]), parse_int(w[3])};
  if (verb == "swipe" && (w.size() == 6 || w.size() == 7)) {
    return Swipe{parse_int(w[2]), parse_int(w[3]), parse_int(w[4]), parse_int(w[5]),
                 w.size() == 7 ? parse_int(w[6]) : 300};
  }
  if (verb == "text" && w.size() == 3) return Text{decode_text(w[2])};
  if (verb == "keyevent" && w.size() == 3) return Key{key_from_adb(w[2])};
  throw Error(Errc::validation, "malformed input command: " + std::string(line));
}

}  // namespace pb::automation
