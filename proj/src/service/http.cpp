#include "avatarsim/service/http.hpp"

#include <csignal>
#include <cstdio>

#include <httplib.h>

namespace avatarsim::service {
namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(ErrorCode::BadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

/// Token from "Authorization: Bearer <t>" or "X-Participant-Token: <t>".
std::string token_of(const httplib::Request& req) {
  const std::string auth = req.get_header_value("Authorization");
  constexpr std::string_view bearer = "Bearer ";
  if (auth.starts_with(bearer)) return auth.substr(bearer.size());
  return req.get_header_value("X-Participant-Token");
}

template <typename F>
httplib::Server::Handler wrap(int ok_status, F f) {
  return [ok_status, f](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, ok_status, f(req));
    } catch (const ServiceError& e) {
      send_json(res, http_status(e.code()), e.to_json());
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", {{"code", "Internal"}, {"message", e.what()}}}});
    }
  };
}

std::string param(const httplib::Request& req, std::size_t i) { return req.matches[static_cast<int>(i)]; }

}  // namespace

void mount(httplib::Server& server, Service& service) {
  Service* s = &service;
  server.Post("/sessions", wrap(201, [s](const auto& req) { return s->create_session(parse_body(req)); }));
  server.Post(R"(/sessions/([^/]+)/close)",
              wrap(200, [s](const auto& req) { return s->close_session(param(req, 1)); }));
  server.Post(R"(/sessions/([^/]+)/participants)", wrap(201, [s](const auto& req) {
                return s->register_participant(param(req, 1), parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/avatars)", wrap(201, [s](const auto& req) {
                return s->submit_avatar(param(req, 1), token_of(req), parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/runs)",
              wrap(202, [s](const auto& req) { return s->start_run(param(req, 1), parse_body(req)); }));
  server.Get(R"(/sessions/([^/]+)/history)",
             wrap(200, [s](const auto& req) { return s->session_history(param(req, 1)); }));
  server.Get(R"(/runs/([^/]+))", wrap(200, [s](const auto& req) { return s->get_run(param(req, 1)); }));
  server.Get(R"(/runs/([^/]+)/report)", wrap(200, [s](const auto& req) { return s->report(param(req, 1)); }));
  server.Get(R"(/runs/([^/]+)/leaderboard)",
             wrap(200, [s](const auto& req) { return s->leaderboard(param(req, 1)); }));
  server.Get(R"(/participants/([^/]+)/versions)", wrap(200, [s](const auto& req) {
               return s->participant_versions(param(req, 1), token_of(req));
             }));
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_json(res, res.status, {{"error", {{"code", "NotFound"}, {"message", "no such endpoint"}}}});
    }
  });
}

HttpServer::HttpServer(Service& service, const std::string& host, int port)
    : server_(std::make_unique<httplib::Server>()) {
  mount(*server_, service);
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

namespace {

httplib::Server* g_server = nullptr;
volatile std::sig_atomic_t g_stopped = 0;

extern "C" void on_signal(int) {
  g_stopped = 1;
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int serve(const ServerOptions& options) {
  ServiceOptions so;
  so.data_dir = options.data_dir;
  so.workers = options.workers;
  Service service(so);
  httplib::Server server;
  mount(server, service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "serving %s on http://%s:%d\n", options.data_dir.c_str(), options.host.c_str(), options.port);
  const bool ok = server.listen(options.host, options.port);
  g_server = nullptr;
  if (!ok && g_stopped == 0) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", options.host.c_str(), options.port);
    return 1;
  }
  return 0;
}

}  // namespace avatarsim::service
