#include <algorithm>
#include <cctype>

#include "httplib.h"
#include "rumourkit/service.hpp"

namespace rumourkit {

struct HttpServer::Impl {
  explicit Impl(AnnotationService& s) : service(s) {}

  void serve(const httplib::Request& req, httplib::Response& res) {
    ApiRequest request{req.method, req.path, {}, req.body};
    for (const auto& [name, value] : req.headers) {
      std::string lower = name;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      request.headers.emplace(std::move(lower), value);
    }
    const auto response = service.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  }

  AnnotationService& service;
  httplib::Server server;
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    impl_->serve(req, res);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Patch(".*", handler);
  impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace rumourkit
