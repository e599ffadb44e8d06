// Per-node controller daemon: simulated relays, power monitor and devices
// behind the control API, optionally registered with an access server.

#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "cli_common.hpp"
#include "pb/device/device_config.hpp"
#include "pb/server/registry.hpp"
#include "pb/service/http_util.hpp"
#include "pb/service/routes.hpp"

namespace {

std::vector<pb::device::DeviceConfig> default_devices() {
  pb::device::DeviceConfig cfg;
  cfg.device_id = "dev1";
  cfg.profile = "SMJ337A";
  cfg.apps = pb::device::standard_apps();
  return {cfg};
}

bool register_with(const std::string& server, const std::string& token, const nlohmann::json& body) {
  const auto [host, port] = pb::service::split_address(server, 8080);
  httplib::Client c(host, port);
  c.set_connection_timeout(5);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  const auto r = c.Post("/nodes", headers, body.dump(), "application/json");
  if (!r) {
    std::cerr << "pb-controller: registration failed: " << httplib::to_string(r.error()) << "\n";
    return false;
  }
  if (r->status >= 300) {
    std::cerr << "pb-controller: registration refused (" << r->status << "): " << r->body << "\n";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement node controller"};
  std::string listen = "0.0.0.0:8081";
  std::string server;
  std::string node_id = "node1";
  std::string devices_path;
  std::string catalog_path;
  std::string advertise;
  std::string token;
  std::string credential;
  std::string location;
  std::vector<std::string> labels;
  double time_scale = 1.0;
  app.add_option("--listen", listen, "Address to serve on")->capture_default_str();
  app.add_option("--server", server, "Access server to register with");
  app.add_option("--node-id", node_id, "Node label")->capture_default_str();
  app.add_option("--devices", devices_path, "Device config file; one SMJ337A device 'dev1' without it");
  app.add_option("--catalog", catalog_path, "Site catalog for wpm jobs; a 20-site synthetic catalog without it");
  app.add_option("--advertise", advertise, "Address the access server should use (default: --listen)");
  app.add_option("--token", token, "Administrator bearer token for registration");
  app.add_option("--credential", credential, "Registration credential (default: node-<id>)");
  app.add_option("--location", location, "Free-form location label");
  app.add_option("--label", labels, "Node label, repeatable");
  app.add_option("--time-scale", time_scale, "Simulated seconds per wall second while idle (0: manual)")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (!pb::server::valid_node_id(node_id)) throw std::invalid_argument("bad node id '" + node_id + "'");
    auto ctl = std::make_unique<pb::controller::Controller>(node_id);
    const auto configs = devices_path.empty() ? default_devices() : pb::device::load_device_configs(devices_path);
    for (const auto& cfg : configs) ctl->add_device(pb::device::build_device(cfg));

    pb::service::ControllerNodeOptions options;
    options.time_scale = time_scale;
    options.catalog = catalog_path.empty() ? pb::wpm::synthetic_catalog({}).catalog : pb::wpm::load_catalog(catalog_path);
    auto node = std::make_shared<pb::service::ControllerNode>(std::move(ctl), std::move(options));

    httplib::Server http;
    pb::service::mount_controller_routes(http, node);
    pb::tools::SignalWatch signals([&] { http.stop(); });

    const auto [host, port] = pb::service::split_address(listen, 8081);
    if (!server.empty()) {
      std::thread([=] {
        nlohmann::json body = {{"id", node_id},
                               {"address", advertise.empty() ? host + ":" + std::to_string(port) : advertise},
                               {"credential", credential.empty() ? "node-" + node_id : credential},
                               {"location", location},
                               {"labels", labels}};
        // the listener may not be up yet; the server probes later anyway
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        if (register_with(server, token, body)) std::cerr << "pb-controller: registered with " << server << "\n";
      }).detach();
    }
    std::cerr << "pb-controller: " << node_id << " listening on " << host << ":" << port << "\n";
    if (!http.listen(host, port) && !pb::tools::g_signalled) {
      std::cerr << "pb-controller: cannot listen on " << listen << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "pb-controller: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
