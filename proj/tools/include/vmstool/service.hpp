#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace vmstool {

struct ServiceConfig {
  std::filesystem::path sessions_dir;
  // Served verbatim by GET /api/v1/manifest; empty means 404.
  std::string manifest_json;
  std::size_t max_body_bytes = 8 * 1024 * 1024;
  // When set, requests must carry a matching X-VMS-Token header.
  std::optional<std::string> token;
};

// Sessions directory after applying the VMS_SESSIONS_DIR override.
std::filesystem::path resolve_sessions_dir(const std::filesystem::path& configured);

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

// Transport-independent ingestion logic: validation, duplicate detection and
// atomic persistence (temporary file, then rename, under a mutex).
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  ServiceResponse ingest(const std::string& body);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

// HTTP front end. Routes:
//   POST /api/v1/sessions   201 | 401 | 409 | 413 | 422
//   GET  /api/v1/manifest   200 | 404
//   GET  /api/v1/health     200
class SessionService {
 public:
  explicit SessionService(ServiceConfig config);
  ~SessionService();

  // Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  ServiceConfig config_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace vmstool
