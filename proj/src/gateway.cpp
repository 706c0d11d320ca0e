// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/gateway.hpp"

#include <httplib.h>

#include <thread>

namespace coopsynth {

std::string_view to_string(FinishReason r) noexcept {
  switch (r) {
    case FinishReason::Length:
      return "length";
    case FinishReason::Stop:
      return "stop";
    case FinishReason::EndpointStop:
      return "endpoint_stop";
  }
  return "endpoint_stop";
}

FinishReason parse_finish_reason(std::string_view s) noexcept {
  if (s == "length") return FinishReason::Length;
  if (s == "stop") return FinishReason::Stop;
  return FinishReason::EndpointStop;
}

std::string render_prompt(const EndpointProfile& profile, std::string_view accumulated) {
  return render_prompt(profile, {}, accumulated);
}

std::string render_prompt(const EndpointProfile& profile, std::string_view question, std::string_view accumulated) {
  const std::string& tpl = profile.prompt_template;
  const auto body_at = tpl.find(kBodyPlaceholder);
  if (body_at == std::string::npos) throw ConfigError("prompt template for " + profile.model_name + " has no {body} placeholder");
  const auto question_at = tpl.find(kQuestionPlaceholder);

  std::string out;
  out.reserve(tpl.size() + question.size() + accumulated.size());
  if (question_at == std::string::npos) {
    // Without a {question} slot the question leads the body.
    out.append(tpl, 0, body_at);
    out.append(question);
    out.append(accumulated);
    out.append(tpl, body_at + kBodyPlaceholder.size());
    return out;
  }
  const bool body_first = body_at < question_at;
  const auto first_at = body_first ? body_at : question_at;
  const auto second_at = body_first ? question_at : body_at;
  const auto first_len = body_first ? kBodyPlaceholder.size() : kQuestionPlaceholder.size();
  const auto second_len = body_first ? kQuestionPlaceholder.size() : kBodyPlaceholder.size();
  out.append(tpl, 0, first_at);
  out.append(body_first ? accumulated : question);
  out.append(tpl, first_at + first_len, second_at - first_at - first_len);
  out.append(body_first ? question : accumulated);
  const std::size_t at = second_at + second_len;
  out.append(tpl, at);
  return out;
}

std::string fill_template(std::string_view tpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    bool replaced = false;
    for (const auto& [key, value] : values) {
      if (!key.empty() && tpl.compare(i, key.size(), key) == 0) {
        out.append(value);
        i += key.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(tpl[i++]);
  }
  return out;
}

CompletionRequest make_request(const EndpointProfile& profile, std::string prompt, int max_tokens) {
  CompletionRequest r;
  r.prompt = std::move(prompt);
  r.max_tokens = max_tokens;
  r.temperature = profile.sampling.temperature;
  r.top_p = profile.sampling.top_p;
  return r;
}

CompletionResult CompletionClient::complete(const EndpointProfile& profile, const CompletionRequest& request) const {
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (!(request.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(request.top_p > 0.0 && request.top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  return do_complete(profile, request);
}

InFlightLimiter::InFlightLimiter(int max_in_flight)
    : capacity_(max_in_flight < 1 ? 1 : max_in_flight), sem_(capacity_) {}

std::pair<std::string, std::string> split_base_url(std::string_view base_url) {
  std::string url(base_url);
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme = url.find("://");
  const auto host_from = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_from);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

json completion_request_body(const EndpointProfile& profile, const CompletionRequest& request) {
  json body = {{"model", profile.model_name},
               {"prompt", request.prompt},
               {"max_tokens", request.max_tokens},
               {"temperature", request.temperature},
               {"top_p", request.top_p},
               {"echo", false}};
  if (request.stop) body["stop"] = *request.stop;
  return body;
}

CompletionResult parse_completion_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("completion response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
    throw ProtocolError("completion response has no choices");
  const json& first = j["choices"][0];
  if (!first.is_object() || !first.contains("text") || !first["text"].is_string())
    throw ProtocolError("completion choice has no text");
  CompletionResult r;
  r.text = first["text"].get<std::string>();
  const auto it = first.find("finish_reason");
  r.finish_reason = (it != first.end() && it->is_string()) ? parse_finish_reason(it->get<std::string>()) : FinishReason::EndpointStop;
  return r;
}

std::string post_json(const std::string& base_url, const std::string& path, const json& body, const HttpOptions& options,
                      InFlightLimiter* limiter) {
  if (base_url.empty()) throw ConfigError("base_url is empty");
  const auto [host, prefix] = split_base_url(base_url);
  const std::string payload = body.dump();
  auto backoff = options.retry.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= options.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      std::optional<InFlightLimiter::Guard> guard;
      if (limiter) guard.emplace(*limiter);
      httplib::Client cli(host);
      cli.set_connection_timeout(options.connect_timeout);
      cli.set_read_timeout(options.read_timeout);
      res = cli.Post(prefix + path, payload, "application/json");
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw EndpointError(res->status, res->body);
    return res->body;
  }
  throw TransportError("POST " + base_url + path + " failed after " + std::to_string(options.retry.max_retries + 1) +
                       " attempts: " + last_error);
}

HttpCompletionClient::HttpCompletionClient(std::shared_ptr<InFlightLimiter> limiter, HttpOptions options)
    : limiter_(std::move(limiter)), options_(options) {}

CompletionResult HttpCompletionClient::do_complete(const EndpointProfile& profile, const CompletionRequest& request) const {
  const std::string body =
      post_json(profile.base_url, "/v1/completions", completion_request_body(profile, request), options_, limiter_.get());
  return parse_completion_response(body);
}

}  // namespace coopsynth
