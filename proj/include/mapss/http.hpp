#pragma once

#include <memory>
#include <string>

#include "mapss/service.hpp"

namespace mapss {

// Serves Service::handle over HTTP/JSON.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds to host:port (port 0 picks a free port). Throws kIo when the port
  // is unavailable. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Sends a request to a remote service at `base_url` (http://host:port).
Response http_call(const std::string& base_url, const Request& request);

}  // namespace mapss
