#pragma once

// HTTP + JSON transport for the session service.

#include <memory>
#include <string>
#include <thread>

#include "avatarsim/service/service.hpp"

namespace httplib {
class Server;
}

namespace avatarsim::service {

struct ServerOptions {
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 1;
};

/// Registers every endpoint of the API on `server`.
void mount(httplib::Server& server, Service& service);

/// A mounted server bound to a port; stops and joins on destruction.
class HttpServer {
 public:
  HttpServer(Service& service, const std::string& host, int port);  // port 0 picks a free one
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const noexcept { return port_; }
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

/// Runs the service in the foreground until the process is stopped.
int serve(const ServerOptions& options);

}  // namespace avatarsim::service
