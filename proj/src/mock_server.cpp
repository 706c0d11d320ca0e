// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/mock_server.hpp"

#include <httplib.h>

namespace coopsynth {
namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

}  // namespace

MockServer::MockServer(std::shared_ptr<MockBackend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

MockServer::~MockServer() { stop(); }

void MockServer::install_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, json{{"status", "ok"}}); });

  server_->Post("/v1/reset", [this](const httplib::Request&, httplib::Response& res) {
    backend_->reset();
    reply(res, 200, json{{"status", "ok"}});
  });

  server_->Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply_error(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("model") || !body["model"].is_string() || !body.contains("prompt") ||
        !body["prompt"].is_string() || !body.contains("max_tokens") || !body["max_tokens"].is_number_integer() ||
        body["max_tokens"].get<long long>() < 1)
      return reply_error(res, 400, "expected model, prompt and a positive max_tokens");
    try {
      const CompletionResult r = backend_->complete(body["model"].get<std::string>(), body["prompt"].get<std::string>(),
                                                    body["max_tokens"].get<int>());
      const char* reason = r.finish_reason == FinishReason::Length ? "length"
                           : r.finish_reason == FinishReason::Stop ? "stop"
                                                                   : "abort";
      reply(res, 200, json{{"object", "text_completion"},
                           {"model", body["model"]},
                           {"choices", json::array({{{"index", 0}, {"text", r.text}, {"finish_reason", reason}}})}});
    } catch (const EndpointError& e) {
      reply_error(res, e.status(), e.body());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server_->Post("/v1/label", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply_error(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("text") || !body["text"].is_string() || !body.contains("target") ||
        !body["target"].is_string())
      return reply_error(res, 400, "expected text and target");
    const std::string text = body["text"].get<std::string>();
    const std::string target = body["target"].get<std::string>();
    if (text.empty()) return reply_error(res, 400, "text is empty");
    if (target != "style" && target != "capability") return reply_error(res, 400, "target must be style or capability");
    try {
      reply(res, 200, verdict_to_json(backend_->predictor().predict(text, parse_token_type(target))));
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });
}

int MockServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw Error("mock server cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockServer::serve_blocking(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error("mock server cannot listen on " + host + ":" + std::to_string(port));
}

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace coopsynth
