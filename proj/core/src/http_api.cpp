#include "titecrm/http_api.hpp"

#include <httplib.h>

#include <functional>

namespace titecrm {

using nlohmann::json;

struct HttpServer::Impl {
  ConductService& service;
  httplib::Server server;
  explicit Impl(ConductService& s) : service(s) {}
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

// Runs a handler and maps engine/service exceptions to HTTP status codes.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TrialNotFound& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const UnknownPatient& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const EnrollmentClosed& e) {
    reply(res, 409, {{"error", e.what()}});
  } catch (const ValidationError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("bad request: ") + e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

HttpServer::HttpServer(ConductService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  srv.Get("/healthz", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}, {"persistent", svc.persistent()}, {"trials", svc.trial_ids().size()}});
  });

  srv.Get("/trials", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"trials", svc.trial_ids()}});
  });

  srv.Post("/trials", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const DesignConfig design = design_from_json(body.value("design", json::object()));
      const Strategy strategy = parse_strategy(body.value("strategy", std::string("C")));
      std::optional<std::vector<double>> skeleton;
      if (body.contains("skeleton") && !body.at("skeleton").is_null())
        skeleton = body.at("skeleton").get<std::vector<double>>();
      const std::string id = svc.create_trial(design, strategy, skeleton, body.value("trial_id", std::string()));
      const auto view = svc.get_state(id);
      reply(res, 201, header_to_json(view.header));
    });
  });

  srv.Post(R"(/trials/([^/]+)/patients)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.contains("time")) throw ValidationError("missing 'time'");
      std::optional<DoseLevel> dose;
      if (body.contains("dose") && !body.at("dose").is_null()) dose = body.at("dose").get<int>();
      reply(res, 201, to_json(svc.enroll_patient(req.matches[1], body.at("time").get<double>(), dose)));
    });
  });

  srv.Post(R"(/trials/([^/]+)/events)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, to_json(svc.post_event(req.matches[1], event_from_json(parse_body(req))))); });
  });

  srv.Get(R"(/trials/([^/]+)/recommendation)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<Weeks> at;
      if (req.has_param("at_time")) {
        const std::string text = req.get_param_value("at_time");
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != text.size()) throw ValidationError("at_time must be a number");
        at = v;
      }
      reply(res, 200, to_json(svc.get_recommendation(req.matches[1], at)));
    });
  });

  srv.Get(R"(/trials/([^/]+)/state)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, to_json(svc.get_state(req.matches[1]))); });
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) reply(res, res.status, {{"error", "no such endpoint"}});
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound <= 0) throw std::runtime_error("cannot bind to " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) throw std::runtime_error("cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace titecrm
