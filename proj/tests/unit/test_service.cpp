#include <catch_amalgamated.hpp>

#include <httplib.h>

#include <chrono>
#include <thread>

#include "pb/device/device_config.hpp"
#include "pb/server/server.hpp"
#include "pb/service/controller_node.hpp"
#include "pb/service/http_util.hpp"
#include "pb/service/routes.hpp"
#include "test_helpers.hpp"

using namespace pb;
using nlohmann::json;

namespace {

std::unique_ptr<controller::Controller> one_device_node(const std::string& node = "node1") {
  auto ctl = std::make_unique<controller::Controller>(node);
  device::DeviceConfig cfg;
  cfg.device_id = "dev1";
  cfg.profile = "SMJ337A";
  cfg.apps = device::standard_apps();
  ctl->add_device(device::build_device(cfg));
  return ctl;
}

std::shared_ptr<service::ControllerNode> make_node(const std::string& node = "node1") {
  service::ControllerNodeOptions opts;
  opts.catalog = wpm::synthetic_catalog({}).catalog;
  return std::make_shared<service::ControllerNode>(one_device_node(node), std::move(opts));
}

server::JobSpec job(const std::string& id, std::vector<server::JobStep> steps) {
  server::JobSpec s;
  s.job_id = id;
  s.steps = std::move(steps);
  return s;
}

json small_wpm() {
  return {{"urls", {"site001.com", "site002.org"}}, {"device_id", "dev1"},      {"browser", device::kChromeBrowser},
          {"reps", 1},                              {"per_page_budget_s", 9.0}, {"page_slot_s", 12.0}};
}

/// httplib server on an ephemeral port, stopped on destruction.
struct Served {
  httplib::Server http;
  int port = 0;
  std::thread thread;

  template <class Mount>
  explicit Served(Mount mount) {
    mount(http);
    port = http.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { http.listen_after_bind(); });
    http.wait_until_ready();
  }
  ~Served() {
    http.stop();
    thread.join();
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port); }
};

struct Client {
  httplib::Client c;
  httplib::Headers headers;
  Client(int port, const std::string& token = {}) : c("127.0.0.1", port) {
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  }
  std::pair<int, json> get(const std::string& path) {
    auto r = c.Get(path, headers);
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body, nullptr, false)};
  }
  std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
    auto r = c.Post(path, headers, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body, nullptr, false)};
  }
  std::string raw(const std::string& path) {
    auto r = c.Get(path, headers);
    REQUIRE(r);
    return r->body;
  }
};

}  // namespace

TEST_CASE("error codes map onto HTTP statuses") {
  CHECK(service::http_status(Errc::validation) == 400);
  CHECK(service::http_status(Errc::permission) == 403);
  CHECK(service::http_status(Errc::not_found) == 404);
  CHECK(service::http_status(Errc::exclusivity) == 409);
  CHECK(service::http_status(Errc::step_failed) == 422);
  CHECK(service::http_status(Errc::unreachable) == 502);
  CHECK(service::http_status(Errc::unavailable) == 503);
  for (int i = 0; i <= static_cast<int>(Errc::conflict); ++i) {
    const auto code = static_cast<Errc>(i);
    CHECK(service::errc_from_string(to_string(code)) == code);
    const Error original(code, "boom");
    const auto body = service::error_body(code, original.what()).dump();
    CHECK(pbtest::error_code_of([&] { service::throw_remote(service::http_status(code), body); }) == code);
  }
  CHECK(service::split_address(":9000", 1) == std::pair<std::string, int>{"127.0.0.1", 9000});
  CHECK(service::split_address("http://host", 8081) == std::pair<std::string, int>{"host", 8081});
}

TEST_CASE("controller node runs jobs one at a time") {
  auto node = make_node();

  SECTION("steps run in order and leave trace artifacts") {
    node->start_job(job("j1", {{"node_setup", {{"power", true}}},
                               {"start_monitor", json::object()},
                               {"wait", {{"seconds", 2.5}}},
                               {"stop_monitor", json::object()},
                               {"cleanup", json::object()}}));
    REQUIRE(node->wait_idle(30));
    const auto st = node->job_status("j1");
    CHECK(st.state == server::JobState::succeeded);
    std::vector<std::string> names;
    for (const auto& a : st.artifacts) names.push_back(a.name);
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "steps.json");
    CHECK(json::parse(node->artifact("j1", "steps.json")).size() == 5);
    REQUIRE(names[1].ends_with(".csv"));
    const auto meta = json::parse(node->artifact("j1", names[2]));
    CHECK(meta["duration_s"].get<double>() == Catch::Approx(2.5));
    CHECK(meta["job_id"] == "j1");
    const auto csv = node->artifact("j1", names[1]);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 12500);
    CHECK(node->with_controller([](auto& c) { return c.safe_state(); }));
  }
  SECTION("a failing step triggers cleanup") {
    node->start_job(job("j2", {{"node_setup", {{"power", true}}}, {"set_voltage", {{"volts", 42}}}}));
    REQUIRE(node->wait_idle(30));
    const auto st = node->job_status("j2");
    CHECK(st.state == server::JobState::failed);
    CHECK_THAT(st.error, Catch::Matchers::ContainsSubstring("set_voltage"));
    CHECK(node->with_controller([](auto& c) { return c.safe_state(); }));
  }
  SECTION("exclusive while running, abortable") {
    node->start_job(job("j3", {{"node_setup", {{"power", true}}}, {"sleep", {{"seconds", 30}}}}));
    CHECK(pbtest::error_code_of([&] { node->start_job(job("j4", {{"status", json::object()}})); }) == Errc::exclusivity);
    CHECK(pbtest::error_code_of([&] { node->call("power_monitor", {{"on", true}}); }) == Errc::exclusivity);
    node->abort_job("j3");
    REQUIRE(node->wait_idle(5));
    CHECK(node->job_status("j3").state == server::JobState::aborted);
    CHECK(node->with_controller([](auto& c) { return c.safe_state(); }));
    CHECK(pbtest::error_code_of([&] { node->start_job(job("j3", {{"status", json::object()}})); }) == Errc::conflict);
  }
  SECTION("bad specs are refused up front") {
    CHECK(pbtest::error_code_of([&] { node->start_job(job("j5", {{"teleport", json::object()}})); }) == Errc::validation);
    auto s = job("j6", {{"status", json::object()}});
    s.constraints.device_id = "ghost";
    CHECK(pbtest::error_code_of([&] { node->start_job(s); }) == Errc::validation);
    CHECK(pbtest::error_code_of([&] { node->job_status("nope"); }) == Errc::not_found);
  }
  SECTION("wpm step stores result and report") {
    node->start_job(job("w1", {{"wpm", small_wpm()}}));
    REQUIRE(node->wait_idle(60));
    REQUIRE(node->job_status("w1").state == server::JobState::succeeded);
    const auto result = json::parse(node->artifact("w1", "wpm-result.json"));
    CHECK(result["ok"] == true);
    CHECK(result["urls"].size() == 2);
    const auto report = json::parse(node->artifact("w1", "wpm-report.json"));
    CHECK(report["series"]["energy_per_url"].size() == 2);
  }
}

TEST_CASE("console input records and drives the device") {
  auto node = make_node();
  CHECK(pbtest::error_code_of([&] { node->frame("dev1"); }) == Errc::unavailable);
  const auto sid = node->open_input("dev1");
  const replay::RecordedEvent down{0, replay::EventKind::mouse_down, {180, 320}, {}, {360, 640}};
  const replay::RecordedEvent up{80, replay::EventKind::mouse_up, {180, 320}, {}, {360, 640}};
  CHECK(pbtest::error_code_of([&] { node->ingest(sid, {down, up}, true); }) == Errc::precondition);
  node->call("device_mirroring", {{"device_id", "dev1"}, {"on", true}});
  const auto f1 = node->frame("dev1");
  const auto f2 = node->frame("dev1");
  CHECK(f2.seq > f1.seq);
  CHECK(f2.content_hash == f1.content_hash);

  const double t0 = node->with_controller([](auto& c) { return c.now(); });
  CHECK(node->ingest(sid, {down, up}, true) == 2);  // the refused batch left nothing behind
  CHECK(node->with_controller([](auto& c) { return c.now(); }) == Catch::Approx(t0 + 0.08));
  CHECK(node->with_controller([](auto& c) { return c.device("dev1").pointer(); }) == Point{360, 640});
  CHECK(pbtest::error_code_of([&] { node->compile_input(sid); }) == Errc::state);
  node->seal_input(sid);
  const auto compiled = node->compile_input(sid);
  REQUIRE_FALSE(compiled.script.steps.empty());
  CHECK(json(compiled.script.steps.front().command)["type"] == "tap");
}

TEST_CASE("HTTP services end to end") {
  auto node = make_node();
  Served ctl_http([&](httplib::Server& h) { service::mount_controller_routes(h, node); });

  server::TokenStore tokens;
  tokens.add("root-token", {"root", server::Role::administrator});
  tokens.add("alice-token", {"alice", server::Role::experimenter});
  tokens.add("tina-token", {"tina", server::Role::tester});
  auto srv = std::make_shared<server::AccessServer>(server::ServerOptions{"lab.test"},
                                                    std::make_shared<server::SystemClock>(),
                                                    server::http_link_factory(5.0));
  Served srv_http([&](httplib::Server& h) { service::mount_server_routes(h, srv, tokens); });

  Client anon(srv_http.port), root(srv_http.port, "root-token"), alice(srv_http.port, "alice-token");
  Client tina(srv_http.port, "tina-token"), ctl(ctl_http.port);
  const json reg = {{"id", "node1"}, {"address", ctl_http.address()}, {"credential", "k1"}, {"labels", {"wifi5"}}};

  auto settle = [&](const std::string& id) {
    for (int i = 0; i < 600; ++i) {
      srv->tick();
      const auto [status, j] = root.get("/jobs/" + id);
      REQUIRE(status == 200);
      if (server::is_terminal(j["state"].get<server::JobState>())) return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    FAIL("job " << id << " never finished");
    return json();
  };

  // authentication and roles
  CHECK(anon.post("/nodes", reg).first == 401);
  CHECK(Client(srv_http.port, "forged").get("/nodes").first == 401);
  const auto [denied, denied_body] = alice.post("/nodes", reg);
  CHECK(denied == 403);
  CHECK(denied_body["error"]["code"] == "permission");

  // registration, probe, provisioning
  const auto [created, rec] = root.post("/nodes", reg);
  REQUIRE(created == 201);
  CHECK(rec["dns_name"] == "node1.lab.test");
  CHECK(root.post("/refresh").first == 200);
  const auto [listed, nodes] = alice.get("/nodes?state=online&label=wifi5");
  CHECK(listed == 200);
  REQUIRE(nodes["nodes"].size() == 1);
  const auto [dev_status, devs] = alice.get("/nodes/node1/devices");
  CHECK(dev_status == 200);
  CHECK(devs["devices"][0]["device_id"] == "dev1");
  CHECK(devs["stale"] == false);
  CHECK(alice.get("/nodes?state=sideways").first == 400);
  const auto provisioning = srv->jobs().front().spec.job_id;
  CHECK(settle(provisioning)["state"] == "succeeded");

  // controller surface
  const auto [st_code, st] = ctl.get("/status");
  CHECK(st_code == 200);
  CHECK(st["node_id"] == "node1");
  CHECK(st["safe"] == true);
  CHECK(ctl.get("/frames?device_id=dev1").first == 503);
  CHECK(ctl.post("/set_voltage", {{"volts", 4.0}}).first == 409);  // meter is off
  CHECK(ctl.post("/power_monitor", {{"on", true}}).first == 200);
  const auto [range_code, range_body] = ctl.post("/set_voltage", {{"volts", 20.0}});
  CHECK(range_code == 400);
  CHECK(range_body["error"]["code"] == "range");
  CHECK(ctl.post("/power_monitor", {{"on", "yes"}}).first == 400);
  CHECK(ctl.post("/teleport").first == 404);
  CHECK(ctl.post("/device_mirroring", {{"device_id", "dev1"}, {"on", true}}).first == 200);
  const auto [frame_code, frame] = ctl.get("/frames?device_id=dev1");
  CHECK(frame_code == 200);
  CHECK(frame["cells"].size() == 64);
  CHECK(ctl.get("/frames?device_id=dev1&after=999999").first == 204);
  const auto [open_code, opened] = ctl.post("/input/sessions", {{"device_id", "dev1"}});
  REQUIRE(open_code == 201);
  const auto sid = opened["session_id"].get<std::string>();
  const json events = {{{"t", 0}, {"kind", "mouse_down"}, {"x", 10}, {"y", 10}, {"view", {360, 640}}},
                       {{"t", 60}, {"kind", "mouse_up"}, {"x", 10}, {"y", 10}, {"view", {360, 640}}}};
  const auto [in_code, in_body] = ctl.post("/input", {{"session_id", sid}, {"events", events}, {"live", true}});
  CHECK(in_code == 200);
  CHECK(in_body["count"] == 2);
  CHECK(ctl.post("/input", {{"session_id", sid}, {"events", {{{"t", 1}, {"kind", "mouse_down"}, {"x", 999}, {"y", 0}, {"view", {360, 640}}}}}})
            .first == 400);
  CHECK(ctl.post("/input/sessions/" + sid + "/seal").first == 200);
  const auto [script_code, script] = ctl.get("/input/sessions/" + sid + "/script");
  CHECK(script_code == 200);
  CHECK_THAT(script["script"].get<std::string>(), Catch::Matchers::ContainsSubstring("\"tap\""));
  CHECK(ctl.post("/cleanup").first == 200);
  CHECK(ctl.get("/status").second["safe"] == true);

  // a WPM job through the access server
  const json spec = {{"constraints", {{"device_id", "dev1"}}}, {"steps", {{{"name", "wpm"}, {"params", small_wpm()}}}}};
  CHECK(tina.post("/jobs", spec).first == 403);
  const auto [sub_code, submitted] = alice.post("/jobs", spec);
  REQUIRE(sub_code == 201);
  const auto id = submitted["job_id"].get<std::string>();
  CHECK(submitted["state"] == "queued");
  const auto done = settle(id);
  CHECK(done["state"] == "succeeded");
  const auto report = json::parse(alice.raw("/jobs/" + id + "/artifacts/wpm-report.json"));
  CHECK(report["result"]["ok"] == true);
  CHECK(tina.get("/jobs/" + id + "/artifacts/wpm-report.json").first == 403);
  const auto [list_code, listed_jobs] = alice.get("/jobs");
  CHECK(list_code == 200);
  CHECK(listed_jobs["jobs"].size() == 1);  // only alice's own

  // abort a running job; the node is cleaned and free again
  const json slow = {{"constraints", {{"vantage_id", "node1"}}},
                     {"steps", {{{"name", "node_setup"}, {"params", {{"power", true}}}}, {{"name", "sleep"}, {"params", {{"seconds", 60}}}}}}};
  const auto slow_id = alice.post("/jobs", slow).second["job_id"].get<std::string>();
  srv->tick();
  CHECK(root.get("/jobs/" + slow_id).second["state"] == "running");
  CHECK(alice.post("/jobs/" + slow_id + "/share", {{"tester", "tina"}}).first == 200);
  const auto [att_code, grant] = tina.post("/jobs/" + slow_id + "/attach");
  CHECK(att_code == 200);
  CHECK(grant["address"] == ctl_http.address());
  const auto [abort_code, aborted] = alice.post("/jobs/" + slow_id + "/abort");
  CHECK(abort_code == 200);
  CHECK(aborted["state"] == "aborted");
  CHECK(node->wait_idle(5));
  CHECK(ctl.get("/status").second["safe"] == true);
  CHECK(tina.post("/jobs/" + slow_id + "/attach").first == 409);

  const auto [missing, missing_body] = alice.get("/jobs/job-999");
  CHECK(missing == 404);
  CHECK(missing_body["error"]["code"] == "not_found");
}
