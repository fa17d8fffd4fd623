#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bidscreen/pipeline.hpp"
#include "bidscreen/reporting.hpp"
#include "bidscreen/screens.hpp"
#include "bidscreen/store.hpp"

namespace bidscreen {

struct ServiceConfig {
  std::filesystem::path store;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  /// When set, every endpoint except /health needs "Authorization: Bearer <token>".
  std::optional<std::string> token;
  Thresholds thresholds;
  /// Model used when a request names none; defaults to the newest stored model.
  std::optional<std::string> default_model;
  ScreenOptions screen_options;
  ReportOptions report;
  /// Optional directory served as static files under "/ui".
  std::optional<std::filesystem::path> static_dir;
};

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;  // raw Authorization header value
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON-over-HTTP front end for a RunStore. `handle` is the whole API and
/// needs no socket; `listen` serves it over HTTP until `stop`.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ServiceResponse handle(const ServiceRequest& request);

  /// Binds the configured host/port and returns the bound port.
  int bind();
  /// Blocks serving requests; call bind() first.
  void listen();
  void stop();

  RunStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bidscreen
