#include "mapss/http.hpp"

#include <httplib.h>

#include "mapss/json_io.hpp"

namespace mapss {

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request request{req.method, req.path, {}, req.body};
    for (const auto& [key, value] : req.params) request.params.emplace(key, value);
    const auto response = impl_->service.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port
  impl_->server.set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  impl_->server.Get(R"(/v1/.*)", handler);
  impl_->server.Post(R"(/v1/.*)", handler);
  impl_->server.Put(R"(/v1/.*)", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host, host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port) + " (port in use?)",
                std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

Response http_call(const std::string& base_url, const Request& request) {
  httplib::Client client(base_url);
  client.set_read_timeout(600, 0);
  httplib::Params params;
  for (const auto& [key, value] : request.params) params.emplace(key, value);
  std::string path = request.path;
  if (!params.empty()) path = httplib::append_query_params(path, params);
  httplib::Result result;
  if (request.method == "GET") {
    result = client.Get(path);
  } else if (request.method == "PUT") {
    result = client.Put(path, request.body, "application/json");
  } else {
    result = client.Post(path, request.body, "application/json");
  }
  if (!result) {
    throw Error(ErrorCode::kIo, "request to " + base_url + " failed: " + httplib::to_string(result.error()), base_url);
  }
  Response response;
  response.status = result->status;
  response.body = result->body.empty() ? Json::object() : parse_json_text(result->body, "response body");
  return response;
}

}  // namespace mapss
