// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "milpilot/orchestrator/http_api.hpp"

#include <httplib.h>

namespace milpilot {

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kConfiguration:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kShape:
      return 400;
    case ErrorCode::kApprovalRequired:
      return 403;
    case ErrorCode::kNotFound:
    case ErrorCode::kMissingFeature:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kGuardrail:
      return 422;
    default:
      return 500;
  }
}

std::pair<std::string, int> ParseBindAddress(const std::string& bind) {
  const std::size_t colon = bind.rfind(':');
  try {
    if (colon == std::string::npos) return {"127.0.0.1", std::stoi(bind)};
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
  } catch (const std::exception&) {
    Fail(ErrorCode::kConfiguration, "bad bind address '" + bind + "'");
  }
}

namespace {

void SendJson(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, std::string_view code,
               const std::string& message) {
  SendJson(res, status, {{"error", code}, {"message", message}});
}

Json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json body = Json::parse(req.body, nullptr, false);
  Require(!body.is_discarded(), ErrorCode::kValidation, "request body is not valid JSON");
  return body;
}

Json JobsToJson(const std::vector<JobRecord>& jobs) {
  Json out = Json::array();
  for (const JobRecord& job : jobs) out.push_back(job.ToJson());
  return out;
}

}  // namespace

ApiServer::ApiServer(Orchestrator& orchestrator, std::string token)
    : orchestrator_(orchestrator),
      token_(std::move(token)),
      server_(std::make_unique<httplib::Server>()) {
  Register();
}

ApiServer::~ApiServer() { Stop(); }

int ApiServer::Bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool ApiServer::Serve() { return server_->listen_after_bind(); }

void ApiServer::Stop() {
  if (server_) server_->stop();
}

bool ApiServer::running() const { return server_->is_running(); }

void ApiServer::Register() {
  httplib::Server& s = *server_;
  Orchestrator& o = orchestrator_;

  s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    const bool mutating = req.method == "POST" || req.method == "DELETE" ||
                          req.method == "PUT" || req.method == "PATCH";
    if (!mutating || token_.empty()) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") != "Bearer " + token_) {
      SendError(res, 401, "unauthorized", "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  s.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const Error& e) {
          SendError(res, HttpStatusFor(e.code()), ErrorCodeName(e.code()), e.what());
        } catch (const nlohmann::json::exception& e) {
          SendError(res, 400, ErrorCodeName(ErrorCode::kValidation), e.what());
        } catch (const std::exception& e) {
          SendError(res, 500, "internal", e.what());
        }
      });

  s.Post("/sessions", [&o](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 201, {{"session_id", o.CreateSession()}});
  });

  s.Post("/jobs", [&o](const httplib::Request& req, httplib::Response& res) {
    const Json body = ParseBody(req);
    Require(body.is_object() && body.contains("session_id") && body.contains("kind") &&
                body.contains("config"),
            ErrorCode::kValidation, "body needs session_id, kind and config");
    const JobRecord job =
        o.SubmitJob(body.at("session_id").get<std::string>(),
                    ParseJobKind(body.at("kind").get<std::string>()), body.at("config"));
    SendJson(res, 201, job.ToJson());
  });

  s.Get("/jobs", [&o](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200, JobsToJson(o.ListJobs(req.get_param_value("session_id"))));
  });

  s.Get(R"(/jobs/([^/]+))", [&o](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200, o.GetJob(req.matches[1]).ToJson());
  });

  s.Get(R"(/jobs/([^/]+)/metrics)", [&o](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::size_t> since;
    if (req.has_param("since_epoch")) {
      try {
        since = std::stoull(req.get_param_value("since_epoch"));
      } catch (const std::exception&) {
        Fail(ErrorCode::kValidation, "since_epoch must be a non-negative integer");
      }
    }
    Json out = Json::array();
    for (const MetricEvent& e : o.Metrics(req.matches[1], since)) out.push_back(e.ToJson());
    SendJson(res, 200, out);
  });

  s.Post(R"(/jobs/([^/]+)/stop)", [&o](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200, o.StopJob(req.matches[1]).ToJson());
  });

  s.Get(R"(/jobs/([^/]+)/comparison)",
        [&o](const httplib::Request& req, httplib::Response& res) {
          SendJson(res, 200, o.Comparison(req.matches[1]));
        });

  s.Post("/deployments", [&o](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 201, o.Deploy(DeployRequest::FromJson(ParseBody(req))).ToJson());
  });

  s.Get(R"(/deployments/([^/]+))", [&o](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200, o.GetDeployment(req.matches[1]).ToJson());
  });

  s.Get("/tuning-outcomes", [&o](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const TuneOutcome& outcome : o.TuningOutcomes()) out.push_back(outcome.ToJson());
    SendJson(res, 200, out);
  });
  const auto read_only = [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Allow", "GET");
    SendError(res, 405, "method_not_allowed", "tuning outcomes are read-only");
  };
  s.Post("/tuning-outcomes", read_only);
  s.Put("/tuning-outcomes", read_only);
  s.Patch("/tuning-outcomes", read_only);
  s.Delete("/tuning-outcomes", read_only);
}

}  // namespace milpilot
