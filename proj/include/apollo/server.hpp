#pragma once

// HTTP+JSON front end for AnalysisService.

#include <functional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apollo/error.hpp"
#include "apollo/service.hpp"

namespace apollo {

/// HTTP status for a library error.
inline int http_status_for(const std::exception& e) {
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const MissingUserPosition*>(&e) || dynamic_cast<const InvalidProfile*>(&e)) return 409;
  if (dynamic_cast<const TransportError*>(&e)) return 502;
  if (dynamic_cast<const MalformedOutput*>(&e)) return 422;
  if (dynamic_cast<const EmptyRegistry*>(&e)) return 503;
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const UnknownTechnique*>(&e) ||
      dynamic_cast<const IncompleteResponses*>(&e) || dynamic_cast<const BodyTooLarge*>(&e)) {
    return 400;
  }
  return 500;
}

inline std::string error_code_for(const std::exception& e) {
  if (dynamic_cast<const NotFound*>(&e)) return "NotFound";
  if (dynamic_cast<const MissingUserPosition*>(&e)) return "MissingUserPosition";
  if (dynamic_cast<const InvalidProfile*>(&e)) return "InvalidProfile";
  if (dynamic_cast<const TransportError*>(&e)) return "TransportError";
  if (dynamic_cast<const MalformedOutput*>(&e)) return "MalformedOutput";
  if (dynamic_cast<const EmptyRegistry*>(&e)) return "EmptyRegistry";
  if (dynamic_cast<const IncompleteResponses*>(&e)) return "IncompleteResponses";
  if (dynamic_cast<const BodyTooLarge*>(&e)) return "BodyTooLarge";
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const UnknownTechnique*>(&e)) return "InvalidRequest";
  return "InternalError";
}

inline nlohmann::json error_body(const std::exception& e) {
  nlohmann::json j{{"error", error_code_for(e)}, {"detail", e.what()}};
  if (const auto* inc = dynamic_cast<const IncompleteResponses*>(&e)) j["missing"] = inc->missing();
  return j;
}

namespace detail {

inline nlohmann::json parse_body(const httplib::Request& req) {
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("request body is not valid JSON");
  return j;
}

inline void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
  res.status = status;
  res.set_content(render(j), "application/json");
}

/// Runs a handler, translating library errors into JSON error responses.
inline void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    send_json(res, http_status_for(e), error_body(e));
  }
}

}  // namespace detail

/// Registers every /api/v1 route on `server`. The service must outlive it.
inline void install_routes(httplib::Server& server, AnalysisService& service) {
  const std::string origin = service.config().cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/api/v1/analyze", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const AnalyzeRequest r = analyze_request_from_json(detail::parse_body(req));
      detail::send_json(res, 200, service.analyze(r));
    });
  });

  server.Get("/api/v1/models", [&service](const httplib::Request&, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.models()); });
  });

  server.Get("/api/v1/faq", [&service](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(service.faq(), "text/markdown; charset=utf-8");
  });

  server.Get("/api/v1/questionnaire", [&service](const httplib::Request&, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.questionnaire()); });
  });

  server.Get(R"(/api/v1/profile/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.get_profile(req.matches[1])); });
  });

  server.Put(R"(/api/v1/profile/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, service.put_profile(req.matches[1], detail::parse_body(req))); });
  });

  server.Post(R"(/api/v1/profile/([^/]+)/political-test)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                detail::guarded(res, [&] {
                  detail::send_json(res, 200, service.political_test(req.matches[1], detail::parse_body(req)));
                });
              });

  server.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
    detail::send_json(res, 200, nlohmann::json{{"status", "ok"}});
  });
}

}  // namespace apollo
