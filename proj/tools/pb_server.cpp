// Access server: node registry, job queue and dispatcher behind the HTTP/JSON
// API.

#include <atomic>
#include <chrono>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "cli_common.hpp"
#include "pb/server/server.hpp"
#include "pb/service/http_util.hpp"
#include "pb/service/routes.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Access server for remote measurement nodes"};
  std::string listen = "0.0.0.0:8080";
  std::string zone{pb::server::kDefaultZone};
  std::string refresh = "30m";
  std::string state_dir;
  std::string tokens_path;
  double tick_s = 1.0;
  double link_timeout_s = 5.0;
  app.add_option("--listen", listen, "Address to serve on")->capture_default_str();
  app.add_option("--zone", zone, "DNS zone for node names")->capture_default_str();
  app.add_option("--refresh-period", refresh, "Probe period, e.g. 90s, 30m")->capture_default_str();
  app.add_option("--state-dir", state_dir, "Directory for the event log, registry snapshot and artifacts");
  app.add_option("--tokens", tokens_path, "Bearer token file; without it every caller is an administrator");
  app.add_option("--tick", tick_s, "Seconds between dispatch/poll rounds")->capture_default_str();
  app.add_option("--link-timeout", link_timeout_s, "Seconds before a node call counts as unreachable")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  pb::server::ServerOptions options;
  options.zone = zone;
  try {
    options.refresh_period_s = pb::tools::parse_duration(refresh);
    if (!state_dir.empty()) options.state_dir = state_dir;
    const auto tokens = tokens_path.empty() ? pb::server::TokenStore{} : pb::server::TokenStore::load(tokens_path);
    if (tokens.empty()) std::cerr << "pb-server: no tokens configured, API is open\n";

    auto server = std::make_shared<pb::server::AccessServer>(options, std::make_shared<pb::server::SystemClock>(),
                                                              pb::server::http_link_factory(link_timeout_s));
    httplib::Server http;
    pb::service::mount_server_routes(http, server, tokens);

    std::atomic<bool> stop{false};
    std::thread loop([&] {
      while (!stop) {
        try {
          if (pb::server::SystemClock{}.now() >= server->next_refresh_at()) server->refresh();
          server->tick();
        } catch (const std::exception& e) {
          std::cerr << "pb-server: " << e.what() << "\n";
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(tick_s));
      }
    });
    pb::tools::SignalWatch signals([&] { http.stop(); });

    const auto [host, port] = pb::service::split_address(listen, 8080);
    std::cerr << "pb-server: listening on " << host << ":" << port << ", zone " << zone << "\n";
    const bool ok = http.listen(host, port);
    stop = true;
    loop.join();
    if (!ok && !pb::tools::g_signalled) {
      std::cerr << "pb-server: cannot listen on " << listen << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "pb-server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
