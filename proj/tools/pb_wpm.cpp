// Web power monitor client: builds requests, runs the pipeline on a local
// simulated node, or submits it to an access server and waits for the report.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "pb/device/device_config.hpp"
#include "pb/service/http_util.hpp"
#include "pb/wpm/pipeline.hpp"
#include "pb/wpm/report.hpp"

using nlohmann::json;

namespace {

struct Common {
  std::vector<std::string> urls;
  std::string urls_file;
  int sites = 0;
  std::string device = "dev1";
  std::string browser = pb::device::kChromeBrowser;
  int reps = 3;
  std::string automation = "simple_load";
  double budget = 30;
  double slot = 120;
  bool no_power = false;
  bool visual = false;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--urls", c.urls, "URLs to load, in order")->delimiter(',');
  cmd.add_option("--urls-file", c.urls_file, "File with one URL per line");
  cmd.add_option("--sites", c.sites, "Use the first N sites of the synthetic catalog");
  cmd.add_option("--device", c.device, "Device id")->capture_default_str();
  cmd.add_option("--browser", c.browser, "Browser package")->capture_default_str();
  cmd.add_option("--reps", c.reps, "Repetitions per URL")->capture_default_str();
  cmd.add_option("--automation", c.automation, "simple_load or interact")->capture_default_str();
  cmd.add_option("--budget", c.budget, "Seconds measured per page")->capture_default_str();
  cmd.add_option("--slot", c.slot, "Seconds reserved per page")->capture_default_str();
  cmd.add_flag("--no-power", c.no_power, "Skip power measurement");
  cmd.add_flag("--visual", c.visual, "Keep mirroring on during the run");
}

pb::wpm::WpmRequest build_request(const Common& c, const pb::wpm::Catalog& synthetic) {
  pb::wpm::WpmRequest r;
  r.urls = c.urls;
  if (!c.urls_file.empty()) {
    std::ifstream in(c.urls_file);
    if (!in) throw pb::Error(pb::Errc::io, "cannot read " + c.urls_file);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line[0] != '#') r.urls.push_back(line);
    }
  }
  if (c.sites > 0) {
    const auto all = synthetic.urls();
    r.urls.insert(r.urls.end(), all.begin(), all.begin() + std::min<std::size_t>(c.sites, all.size()));
  }
  r.device_id = c.device;
  r.browser = c.browser;
  r.reps = c.reps;
  r.power = !c.no_power;
  r.visual = c.visual;
  r.automation = json(c.automation).get<pb::wpm::Automation>();
  if (c.automation != "simple_load" && c.automation != "interact") {
    throw pb::Error(pb::Errc::validation, "unknown automation '" + c.automation + "'");
  }
  r.per_page_budget_s = c.budget;
  r.page_slot_s = c.slot;
  r.validate();
  return r;
}

std::string get_checked(httplib::Client& c, const std::string& path, const httplib::Headers& h) {
  auto r = c.Get(path, h);
  if (!r) throw pb::Error(pb::Errc::unreachable, path + ": " + httplib::to_string(r.error()));
  if (r->status >= 300) pb::service::throw_remote(r->status, r->body);
  return r->body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure the energy of loading web pages on a test device"};
  app.require_subcommand(1);
  pb::wpm::SyntheticCatalogSpec synth;
  app.add_option("--catalog-sites", synth.sites, "Synthetic catalog size")->capture_default_str();
  app.add_option("--cert-errors", synth.cert_errors, "Synthetic sites with certificate errors");
  app.add_option("--timeouts", synth.timeouts, "Synthetic sites that never answer");
  app.add_option("--http-errors", synth.http_errors, "Synthetic sites answering 4xx/5xx");
  app.add_option("--duplicates", synth.duplicate_tlds, "Synthetic twins under another TLD");
  app.add_option("--denylisted", synth.denylisted, "Synthetic sites on the denylist");
  app.add_option("--catalog-seed", synth.seed, "Synthetic catalog seed")->capture_default_str();

  Common common;
  auto* request_cmd = app.add_subcommand("request", "Print the request document");
  add_common(*request_cmd, common);

  std::string profile = "SMJ337A";
  std::uint64_t seed = 1;
  std::string format = "json";
  std::string catalog_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run on a local simulated node and print the report");
  add_common(*simulate_cmd, common);
  simulate_cmd->add_option("--profile", profile, "Device preset")->capture_default_str();
  simulate_cmd->add_option("--seed", seed, "Device seed")->capture_default_str();
  simulate_cmd->add_option("--format", format, "json or csv")->capture_default_str();
  simulate_cmd->add_option("--catalog", catalog_path, "Site catalog (default: synthetic)");

  std::string prefilter_catalog;
  auto* prefilter_cmd = app.add_subcommand("prefilter", "Classify URLs before a study");
  add_common(*prefilter_cmd, common);
  prefilter_cmd->add_option("--catalog", prefilter_catalog, "Site catalog (default: synthetic)");

  std::string server = "127.0.0.1:8080";
  std::string token;
  bool wait = false;
  double poll_s = 2.0;
  double max_duration = 3600;
  auto* submit_cmd = app.add_subcommand("submit", "Submit to an access server");
  add_common(*submit_cmd, common);
  submit_cmd->add_option("--server", server, "Access server")->capture_default_str();
  submit_cmd->add_option("--token", token, "Bearer token");
  submit_cmd->add_flag("--wait", wait, "Poll until the job ends and print its report");
  submit_cmd->add_option("--poll", poll_s, "Seconds between polls")->capture_default_str();
  submit_cmd->add_option("--max-duration", max_duration, "Job time limit in seconds")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto synthetic = pb::wpm::synthetic_catalog(synth);
    if (*request_cmd) {
      std::cout << json(build_request(common, synthetic.catalog)).dump(2) << "\n";
      return 0;
    }
    if (*prefilter_cmd) {
      const auto catalog = prefilter_catalog.empty() ? synthetic.catalog : pb::wpm::load_catalog(prefilter_catalog);
      pb::wpm::PrefilterOptions opts;
      opts.probe_budget_s = common.budget;
      if (prefilter_catalog.empty()) opts.denylist = synthetic.denylist;
      const auto r = pb::wpm::prefilter(build_request(common, catalog).urls, catalog, opts);
      json partitions = json::object();
      for (const auto& [status, urls] : r.partitions) partitions[json(status).get<std::string>()] = urls;
      std::cout << json{{"counts", r.counts()}, {"partitions", partitions}}.dump(2) << "\n";
      return 0;
    }
    if (*simulate_cmd) {
      const auto catalog = catalog_path.empty() ? synthetic.catalog : pb::wpm::load_catalog(catalog_path);
      const auto request = build_request(common, catalog);
      pb::controller::Controller ctl("local");
      pb::device::DeviceConfig cfg;
      cfg.device_id = request.device_id;
      cfg.profile = profile;
      cfg.seed = seed;
      cfg.apps = pb::device::standard_apps();
      ctl.add_device(pb::device::build_device(cfg));
      const auto result = pb::wpm::run(ctl, request, catalog);
      const auto trace = result.trace_ids.empty() ? nullptr : ctl.find_trace(result.trace_ids.front());
      std::cout << pb::wpm::report(result, trace.get(), format) << "\n";
      return result.ok ? 0 : 2;
    }

    // submit
    const auto request = build_request(common, synthetic.catalog);
    const auto [host, port] = pb::service::split_address(server, 8080);
    httplib::Client c(host, port);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    json spec = {{"kind", "experiment"},
                 {"constraints", {{"device_id", request.device_id}}},
                 {"steps", {{{"name", "wpm"}, {"params", request}}}},
                 {"max_duration_s", max_duration}};
    auto r = c.Post("/jobs", headers, spec.dump(), "application/json");
    if (!r) throw pb::Error(pb::Errc::unreachable, server + ": " + httplib::to_string(r.error()));
    if (r->status >= 300) pb::service::throw_remote(r->status, r->body);
    const auto job_id = json::parse(r->body).at("job_id").get<std::string>();
    if (!wait) {
      std::cout << json{{"job_id", job_id}}.dump() << "\n";
      return 0;
    }
    std::string last;
    while (true) {
      const auto job = json::parse(get_checked(c, "/jobs/" + job_id, headers));
      const auto state = job.at("state").get<std::string>();
      if (state != last) std::cerr << job_id << ": " << state << "\n";
      last = state;
      if (state == "succeeded" || state == "failed" || state == "aborted") {
        if (state != "succeeded") {
          std::cerr << job.value("error", json()).dump() << "\n";
          return 2;
        }
        break;
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(poll_s));
    }
    std::cout << get_checked(c, "/jobs/" + job_id + "/artifacts/wpm-report.json", headers) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "pb-wpm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
