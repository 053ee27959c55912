#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "bridgerole/pipeline.hpp"

namespace bridgerole::service {

inline constexpr std::string_view kApiPrefix = "/api/v1";

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Read-only HTTP front end over an immutable snapshot. What-if requests are
/// evaluated per call on copies, so handlers share no mutable state.
class Service {
 public:
  explicit Service(std::shared_ptr<const pipeline::CitySnapshot> snapshot);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Routing without sockets; used by the HTTP handlers.
  Response handle(std::string_view method, std::string_view path, std::string_view body) const;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port. Throws Error(kPortInUse) when the port cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires bind().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bridgerole::service
