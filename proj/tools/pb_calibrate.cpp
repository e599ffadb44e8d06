// Re-derives the anchored device preset coefficients and compares them with
// the shipped values.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pb/scenarios/calibrate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solve device preset coefficients from their measurement anchors"};
  bool as_json = false;
  bool check = false;
  double tolerance = 1e-4;
  app.add_flag("--json", as_json, "Print the results as JSON");
  app.add_flag("--check", check, "Exit with status 1 when a shipped value differs from its solution");
  app.add_option("--tolerance", tolerance, "Allowed absolute difference for --check")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto values = pb::scenarios::calibrate_presets();
  bool ok = true;
  for (const auto& v : values) ok = ok && v.matches(tolerance);

  if (as_json) {
    std::cout << nlohmann::json{{"values", values}, {"ok", ok}}.dump(2) << "\n";
  } else {
    std::printf("%-9s %-13s %14s %14s  %s\n", "profile", "coefficient", "shipped", "solved", "anchor");
    for (const auto& v : values) {
      std::printf("%-9s %-13s %14.6f %14.6f  %s%s\n", v.profile.c_str(), v.coefficient.c_str(), v.shipped, v.solved,
                  v.anchor.c_str(), v.matches(tolerance) ? "" : "  <-- differs");
    }
  }
  return check && !ok ? 1 : 0;
}
