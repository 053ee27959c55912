#include "bridgerole/service.hpp"

#include "bridgerole/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace bridgerole::service {

struct Service::Impl {
  std::shared_ptr<const pipeline::CitySnapshot> snapshot;
  std::string bridges;
  std::string classification;
  std::string embedding2d;
  std::string metrics;
  std::string overlay;
  httplib::Server server;
  bool bound = false;
};

namespace {

Response error_response(int status, std::string_view code, std::string_view message) {
  return {status, nlohmann::json{{"error", code}, {"message", message}}.dump()};
}

}  // namespace

Service::Service(std::shared_ptr<const pipeline::CitySnapshot> snapshot) : impl_(std::make_unique<Impl>()) {
  if (!snapshot) throw Error(ErrorCode::kInvalidArgument, "service needs a snapshot");
  const auto& s = *snapshot;
  if (s.classifications.size() != s.bridge_count()) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot has no classifications");
  }
  impl_->bridges = pipeline::bridges_json(s);
  impl_->classification = pipeline::classification_json(s);
  impl_->embedding2d = pipeline::embedding2d_json(s);
  impl_->metrics = pipeline::metrics_json(s);
  impl_->overlay = pipeline::overlay_geojson(s);
  impl_->snapshot = std::move(snapshot);

  auto get = [this](const char* route) {
    impl_->server.Get(std::string(kApiPrefix) + route, [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = handle("GET", req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    });
  };
  for (const char* route : {"/bridges", "/classification", "/embedding2d", "/metrics", "/overlay"}) get(route);
  impl_->server.Post(std::string(kApiPrefix) + "/whatif",
                     [this](const httplib::Request& req, httplib::Response& res) {
                       const auto r = handle("POST", req.path, req.body);
                       res.status = r.status;
                       res.set_content(r.body, r.content_type);
                     });
  impl_->server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const auto r = error_response(res.status, "NotFound", "no such endpoint");
      res.set_content(r.body, r.content_type);
    }
  });
}

Service::~Service() { stop(); }

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) const {
  if (path.substr(0, kApiPrefix.size()) != kApiPrefix) return error_response(404, "NotFound", "no such endpoint");
  const auto route = path.substr(kApiPrefix.size());
  if (method == "GET") {
    if (route == "/bridges") return {200, impl_->bridges};
    if (route == "/classification") return {200, impl_->classification};
    if (route == "/embedding2d") return {200, impl_->embedding2d};
    if (route == "/metrics") return {200, impl_->metrics};
    if (route == "/overlay") return {200, impl_->overlay, "application/geo+json"};
  } else if (method == "POST" && route == "/whatif") {
    try {
      const auto request = pipeline::whatif_request_from_json(body, *impl_->snapshot);
      const auto result = pipeline::whatif(*impl_->snapshot, request);
      return {200, pipeline::whatif_json(*impl_->snapshot, result)};
    } catch (const Error& e) {
      return error_response(400, to_string(e.code()), e.what());
    }
  }
  return error_response(404, "NotFound", "no such endpoint");
}

int Service::bind(const std::string& host, int port) {
  // httplib defaults to SO_REUSEPORT, which would let a second server share the port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kPortInUse, "could not bind any port on " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kPortInUse, "port " + std::to_string(port) + " is not available on " + host);
  }
  impl_->bound = true;
  return bound;
}

void Service::run() {
  if (!impl_->bound) throw Error(ErrorCode::kInvalidArgument, "bind() before run()");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace bridgerole::service
