#include "pb/replay/script.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "pb/common/error.hpp"

namespace pb::replay {

std::int64_t AutomationScript::duration_ms() const noexcept {
  std::int64_t total = 0;
  for (const auto& s : steps) total += s.delay_ms + automation::gesture_duration_ms(s.command);
  return total;
}

namespace {

struct Timed {
  std::int64_t start = 0;
  automation::InputCommand command;
};

struct Press {
  std::int64_t t = 0;
  Point at;
};

struct TextRun {
  std::int64_t start = 0;
  std::int64_t last = 0;
  std::string text;
};

}  // namespace

CompileResult compile(const RecordingSession& session, const CompileOptions& options) {
  CompileResult out;
  out.script.device_id = session.device_id;
  out.script.device_size = session.device_size;
  if (session.events.empty()) return out;

  std::vector<Timed> cmds;
  Press press;
  bool pressed = false;
  std::optional<TextRun> run;
  auto flush = [&] {
    if (run) cmds.push_back({run->start, automation::Text{run->text}});
    run.reset();
  };

  for (const auto& e : session.events) {
    if (e.is_mouse()) {
      flush();
      const Point p = map_coords(e.position, e.view, session.device_size);
      if (e.kind == EventKind::mouse_down) {
        if (pressed) out.warnings.push_back("press at t=" + std::to_string(press.t) + " ms had no release; dropped");
        press = Press{e.t_ms, p};
        pressed = true;
      } else if (e.kind == EventKind::mouse_up) {
        if (!pressed) {
          out.warnings.push_back("release at t=" + std::to_string(e.t_ms) + " ms without a press; ignored");
          continue;
        }
        const double dist = std::hypot(p.x - press.at.x, p.y - press.at.y);
        const auto dur = e.t_ms - press.t;
        if (dist < options.tap_max_distance_px && dur < options.tap_max_duration_ms) {
          cmds.push_back({press.t, automation::Tap{press.at.x, press.at.y}});
        } else {
          cmds.push_back({press.t, automation::Swipe{press.at.x, press.at.y, p.x, p.y,
                                                      static_cast<int>(std::max<std::int64_t>(1, dur))}});
        }
        pressed = false;
      }
      continue;
    }
    if (e.kind == EventKind::key_up) {
      if (run) run->last = e.t_ms;
      continue;
    }
    if (e.key.size() == 1) {
      if (run && e.t_ms - run->last > options.text_gap_ms) flush();
      if (!run) run = TextRun{e.t_ms, e.t_ms, {}};
      run->text += e.key;
      run->last = e.t_ms;
    } else {
      flush();
      cmds.push_back({e.t_ms, automation::Key{automation::named_key_from_string(e.key)}});
    }
  }
  flush();
  if (pressed) out.warnings.push_back("press at t=" + std::to_string(press.t) + " ms had no release; dropped");

  std::stable_sort(cmds.begin(), cmds.end(), [](const Timed& a, const Timed& b) { return a.start < b.start; });
  std::int64_t cursor = session.events.front().t_ms;
  for (auto& c : cmds) {
    const auto delay = std::max<std::int64_t>(0, c.start - cursor);
    out.script.steps.push_back({static_cast<int>(delay), std::move(c.command)});
    cursor = std::max(cursor, c.start) + automation::gesture_duration_ms(out.script.steps.back().command);
  }
  const auto tail = session.events.back().t_ms - cursor;
  if (tail > 0) out.script.steps.push_back({0, automation::Wait{static_cast<int>(tail)}});
  return out;
}

std::string to_jsonl(const AutomationScript& script) {
  std::string out = nlohmann::json{{"device_id", script.device_id}, {"device_size", script.device_size}}.dump();
  out += '\n';
  for (const auto& s : script.steps) {
    out += nlohmann::json{{"delay_ms", s.delay_ms}, {"command", s.command}}.dump();
    out += '\n';
  }
  return out;
}

AutomationScript parse_jsonl(const std::string& text) {
  AutomationScript script;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::validation, "script line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!header && j.contains("device_id")) {
      script.device_id = j["device_id"].get<std::string>();
      script.device_size = j.at("device_size").get<ScreenSize>();
      header = true;
      continue;
    }
    ScriptStep step{j.at("delay_ms").get<int>(), j.at("command").get<automation::InputCommand>()};
    if (step.delay_ms < 0) throw Error(Errc::validation, "script line " + std::to_string(lineno) + ": negative delay");
    automation::validate(step.command);
    script.steps.push_back(std::move(step));
  }
  return script;
}

void save_script(const AutomationScript& script, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << to_jsonl(script);
}

AutomationScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

}  // namespace pb::replay
