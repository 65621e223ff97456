#pragma once

#include <memory>
#include <string>

#include "titecrm/conduct.hpp"

namespace titecrm {

/// HTTP+JSON front end for a ConductService:
///   POST /trials                          {"design":{...},"strategy":"C","skeleton"?:[...],"trial_id"?:"..."}
///   POST /trials/{id}/patients            {"time":4.0,"dose"?:2}
///   POST /trials/{id}/events              {"time":7.0,"patient_id":1,"kind":"progression"}
///   GET  /trials/{id}/recommendation[?at_time=8]
///   GET  /trials/{id}/state
///   GET  /trials
///   GET  /healthz
/// Errors are {"error": message} with 400 (validation), 404 (unknown trial
/// or patient) or 409 (enrollment closed).
class HttpServer {
 public:
  explicit HttpServer(ConductService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws
  /// std::runtime_error when binding fails.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace titecrm
