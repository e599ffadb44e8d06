#include "pb/service/routes.hpp"

#include <httplib.h>

#include "pb/common/error.hpp"
#include "pb/service/http_util.hpp"

namespace pb::service {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, Errc code, const std::string& message, int status = 0) {
  res.status = status ? status : http_status(code);
  res.set_content(error_body(code, message).dump(), kJson);
}

/// Runs a handler and turns exceptions into error documents.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      fail(res, e.code(), e.what());
    } catch (const json::exception& e) {
      fail(res, Errc::validation, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      fail(res, Errc::io, e.what());
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

std::string param(const httplib::Request& req, const char* name) {
  auto it = req.path_params.find(name);
  return it == req.path_params.end() ? std::string{} : it->second;
}

std::optional<std::string> query(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

// --- controller ---------------------------------------------------------------------

void mount_controller_routes(httplib::Server& http, std::shared_ptr<ControllerNode> node) {
  http.Get("/status", guarded([node](const auto&, auto& res) { send(res, node->status()); }));
  http.Get("/devices", guarded([node](const auto&, auto& res) { send(res, {{"devices", node->devices()}}); }));

  for (const auto& op : controller_ops()) {
    http.Post("/" + op, guarded([node, op](const auto& req, auto& res) { send(res, node->call(op, body_of(req))); }));
  }

  http.Post("/jobs/run", guarded([node](const auto& req, auto& res) {
              const auto spec = body_of(req).template get<server::JobSpec>();
              node->start_job(spec);
              send(res, {{"job_id", spec.job_id}, {"state", server::JobState::running}}, 202);
            }));
  http.Get("/jobs/:id", guarded([node](const auto& req, auto& res) { send(res, node->job_status(param(req, "id"))); }));
  http.Post("/jobs/:id/abort", guarded([node](const auto& req, auto& res) {
              node->abort_job(param(req, "id"));
              send(res, {{"job_id", param(req, "id")}, {"abort", true}});
            }));
  http.Get("/artifacts/:job/:name", guarded([node](const auto& req, auto& res) {
             const auto name = param(req, "name");
             const bool is_json = name.size() > 5 && name.ends_with(".json");
             res.set_content(node->artifact(param(req, "job"), name), is_json ? kJson : "text/plain");
           }));
  http.Get("/traces/:id", guarded([node](const auto& req, auto& res) {
             const auto id = param(req, "id");
             const auto format = query(req, "format").value_or("csv");
             if (format == "json") return send(res, node->trace_metadata(id));
             if (format != "csv") throw Error(Errc::validation, "format must be csv or json");
             res.set_content(node->trace_csv(id), "text/csv");
           }));

  // mirroring, polled by the console; each call renders the next frame
  http.Get("/frames", guarded([node](const auto& req, auto& res) {
             const auto device = query(req, "device_id");
             if (!device) throw Error(Errc::validation, "missing query parameter 'device_id'");
             const auto f = node->frame(*device);
             if (auto after = query(req, "after"); after && f.seq <= std::stoull(*after)) {
               res.status = 204;
               return;
             }
             send(res, frame_json(f));
           }));

  // console input capture and live drive
  http.Post("/input/sessions", guarded([node](const auto& req, auto& res) {
              const auto b = body_of(req);
              send(res, {{"session_id", node->open_input(b.at("device_id").template get<std::string>())}}, 201);
            }));
  http.Post("/input", guarded([node](const auto& req, auto& res) {
              const auto b = body_of(req);
              const auto id = b.at("session_id").template get<std::string>();
              const auto events = b.value("events", std::vector<replay::RecordedEvent>{});
              const auto count = node->ingest(id, events, b.value("live", false));
              send(res, {{"session_id", id}, {"count", count}});
            }));
  http.Get("/input/sessions/:id",
           guarded([node](const auto& req, auto& res) { send(res, node->input_session(param(req, "id"))); }));
  http.Post("/input/sessions/:id/seal",
            guarded([node](const auto& req, auto& res) { send(res, node->seal_input(param(req, "id"))); }));
  http.Get("/input/sessions/:id/script", guarded([node](const auto& req, auto& res) {
             const auto c = node->compile_input(param(req, "id"));
             send(res, {{"script", replay::to_jsonl(c.script)}, {"warnings", c.warnings}});
           }));
}

// --- access server ---------------------------------------------------------------------

namespace {

class Authenticator {
 public:
  explicit Authenticator(server::TokenStore tokens) : tokens_(std::move(tokens)) {}

  /// Errc::permission with HTTP 401 when the token is missing or unknown.
  server::Principal operator()(const httplib::Request& req) const {
    if (tokens_.empty()) return {"anonymous", server::Role::administrator};
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.rfind(kBearer, 0) == 0) {
      if (auto p = tokens_.find(std::string_view(header).substr(kBearer.size()))) return *p;
    }
    throw Unauthenticated{};
  }

  struct Unauthenticated {};

 private:
  server::TokenStore tokens_;
};

template <class F>
httplib::Server::Handler authed(std::shared_ptr<const Authenticator> auth, F f) {
  return guarded([auth, f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    std::optional<server::Principal> who;
    try {
      who = (*auth)(req);
    } catch (const Authenticator::Unauthenticated&) {
      res.set_header("WWW-Authenticate", "Bearer");
      return fail(res, Errc::permission, "missing or unknown bearer token", 401);
    }
    f(*who, req, res);
  });
}

json job_view(const server::JobExecution& j) { return j; }

}  // namespace

void mount_server_routes(httplib::Server& http, std::shared_ptr<server::AccessServer> srv,
                         server::TokenStore tokens) {
  using server::Principal;
  auto auth = std::make_shared<const Authenticator>(std::move(tokens));

  http.Post("/nodes", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
              const auto b = body_of(req);
              const auto rec = srv->register_vantage_point(
                  who, b.at("id").template get<std::string>(), b.at("address").template get<std::string>(),
                  b.at("credential").template get<std::string>(), b.value("location", std::string{}),
                  b.value("labels", std::set<std::string>{}));
              send(res, rec, 201);
            }));
  http.Delete("/nodes/:id", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
                srv->remove_vantage_point(who, param(req, "id"));
                res.status = 204;
              }));
  http.Get("/nodes", authed(auth, [srv](const Principal&, const auto& req, auto& res) {
             std::optional<server::NodeState> state;
             if (auto s = query(req, "state")) {
               if (*s != "online" && *s != "offline") throw Error(Errc::validation, "state must be online or offline");
               state = json(*s).template get<server::NodeState>();
             }
             send(res, {{"nodes", srv->list_nodes(query(req, "label"), state)}});
           }));
  http.Get("/nodes/:id", authed(auth, [srv](const Principal&, const auto& req, auto& res) {
             send(res, srv->node(param(req, "id")));
           }));
  http.Get("/nodes/:id/devices", authed(auth, [srv](const Principal&, const auto& req, auto& res) {
             const auto d = srv->list_devices(param(req, "id"));
             send(res, {{"devices", d.devices}, {"stale", d.stale}});
           }));

  http.Post("/jobs", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
              const auto id = srv->submit_job(body_of(req).template get<server::JobSpec>(), who);
              send(res, job_view(srv->job(id)), 201);
            }));
  http.Get("/jobs", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
             const auto state = query(req, "state");
             json out = json::array();
             for (const auto& j : srv->jobs()) {
               if (who.role != server::Role::administrator && j.spec.owner != who.id) continue;
               if (state && *state != server::to_string(j.state)) continue;
               out.push_back(job_view(j));
             }
             send(res, {{"jobs", out}});
           }));
  http.Get("/jobs/:id", authed(auth, [srv](const Principal&, const auto& req, auto& res) {
             send(res, job_view(srv->job(param(req, "id"))));
           }));
  http.Post("/jobs/:id/abort", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
              send(res, job_view(srv->abort_job(who, param(req, "id"))));
            }));
  http.Get("/jobs/:id/artifacts/:name", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
             const auto id = param(req, "id");
             const auto job = srv->job(id);
             if (who.role != server::Role::administrator && job.spec.owner != who.id) {
               throw Error(Errc::permission, "artifacts of " + id + " belong to " + job.spec.owner);
             }
             const auto name = param(req, "name");
             res.set_content(srv->artifact(id, name), name.ends_with(".json") ? kJson : "text/plain");
           }));
  http.Post("/jobs/:id/share", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
              const auto tester = body_of(req).at("tester").template get<std::string>();
              srv->share_session(who, param(req, "id"), tester);
              send(res, {{"job_id", param(req, "id")}, {"tester", tester}});
            }));
  http.Post("/jobs/:id/attach", authed(auth, [srv](const Principal& who, const auto& req, auto& res) {
              const auto g = srv->attach(who, param(req, "id"));
              send(res, {{"job_id", g.job_id},
                         {"vantage_id", g.vantage_id},
                         {"address", g.address},
                         {"device_id", g.device_id ? json(*g.device_id) : json()}});
            }));
  http.Post("/refresh", authed(auth, [srv](const Principal& who, const auto&, auto& res) {
              server::require_role(who, {server::Role::administrator}, "refresh the registry");
              send(res, srv->refresh());
            }));
}

}  // namespace pb::service
