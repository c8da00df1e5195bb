#include "vmstool/service.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "vms/errors.hpp"
#include "vms/session.hpp"
#include "vms/tensor_io.hpp"

namespace vmstool {
namespace {

using nlohmann::json;

ServiceResponse error_response(int status, const std::string& message, json fields = json::array()) {
  return {status, json{{"error", message}, {"fields", std::move(fields)}}.dump()};
}

bool safe_id(const std::string& id) {
  static const std::regex ok("[A-Za-z0-9][A-Za-z0-9_.-]{0,127}");
  return std::regex_match(id, ok);
}

}  // namespace

std::filesystem::path resolve_sessions_dir(const std::filesystem::path& configured) {
  if (const char* env = std::getenv("VMS_SESSIONS_DIR"); env && *env) return env;
  return configured;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

ServiceResponse SessionStore::ingest(const std::string& body) {
  vms::SessionLog log;
  try {
    log = vms::parse_session_log(body);
  } catch (const vms::ValidationError& e) {
    json fields = json::array();
    for (const auto& f : e.errors()) fields.push_back({{"field", f.field}, {"message", f.message}});
    return error_response(422, "session failed validation", std::move(fields));
  }
  if (!safe_id(log.session_id)) {
    return error_response(422, "session failed validation",
                          json::array({{{"field", "session.session_id"},
                                        {"message", "must match [A-Za-z0-9][A-Za-z0-9_.-]*"}}}));
  }
  const auto target = dir_ / (log.session_id + ".jsonl");
  const std::string canonical = vms::serialize_session_log(log);
  std::lock_guard lock(mutex_);
  if (std::filesystem::exists(target)) {
    return error_response(409, "session_id '" + log.session_id + "' already exists");
  }
  vms::write_file_atomic(target, canonical);
  return {201, json{{"session_id", log.session_id}}.dump()};
}

SessionService::SessionService(ServiceConfig config)
    : config_(std::move(config)), store_(config_.sessions_dir), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.set_payload_max_length(config_.max_body_bytes);
  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (!config_.token) return true;
    if (req.get_header_value("X-VMS-Token") == *config_.token) return true;
    res.status = 401;
    res.set_content(json{{"error", "missing or wrong X-VMS-Token"}}.dump(), "application/json");
    return false;
  };
  srv.Post("/api/v1/sessions", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    const auto r = store_.ingest(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  srv.Get("/api/v1/manifest", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    if (config_.manifest_json.empty()) {
      res.status = 404;
      res.set_content(json{{"error", "no manifest configured"}}.dump(), "application/json");
      return;
    }
    res.set_content(config_.manifest_json, "application/json");
  });
  srv.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 413) {
      res.set_content(json{{"error", "payload too large"}}.dump(), "application/json");
    }
  });
}

SessionService::~SessionService() = default;

int SessionService::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw vms::Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void SessionService::listen() { server_->listen_after_bind(); }

void SessionService::stop() { server_->stop(); }

}  // namespace vmstool
