#pragma once

#include <memory>

#include "pb/server/auth.hpp"
#include "pb/server/server.hpp"
#include "pb/service/controller_node.hpp"

namespace httplib {
class Server;
}

namespace pb::service {

/// Controller routes (default port 8081):
///   GET  /status, /devices, /jobs/{id}, /artifacts/{job}/{name},
///        /traces/{id}[?format=json], /frames?device_id=,
///        /input/sessions/{id}, /input/sessions/{id}/script
///   POST /<Table 1 op>, /jobs/run, /jobs/{id}/abort, /input/sessions,
///        /input, /input/sessions/{id}/seal
void mount_controller_routes(httplib::Server& http, std::shared_ptr<ControllerNode> node);

/// Access-server routes (default port 8080), bearer-token authenticated:
///   POST   /nodes, /jobs, /jobs/{id}/abort, /jobs/{id}/share,
///          /jobs/{id}/attach, /refresh
///   GET    /nodes?label=&state=, /nodes/{id}, /nodes/{id}/devices,
///          /jobs, /jobs/{id}, /jobs/{id}/artifacts/{name}
///   DELETE /nodes/{id}
/// An empty token store admits every caller as "anonymous" administrator.
void mount_server_routes(httplib::Server& http, std::shared_ptr<server::AccessServer> server,
                         server::TokenStore tokens);

}  // namespace pb::service
