// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <initializer_list>
#include <utility>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "coopsynth/core.hpp"

namespace coopsynth {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 1;  // in the endpoint's own tokenizer
  double temperature = 0.0;
  double top_p = 1.0;
  std::optional<std::vector<std::string>> stop;
};

enum class FinishReason { Length, Stop, EndpointStop };

std::string_view to_string(FinishReason r) noexcept;
// "length" -> Length, "stop" -> Stop, anything else -> EndpointStop.
FinishReason parse_finish_reason(std::string_view s) noexcept;

struct CompletionResult {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;

  bool operator==(const CompletionResult&) const = default;
};

// Substitutes the accumulated response body (and optionally the question)
// into the profile's template. Substitution happens at the template's own
// placeholder positions only; placeholder text inside the substituted
// values is left alone. Throws ConfigError when {body} is missing.
std::string render_prompt(const EndpointProfile& profile, std::string_view accumulated);
std::string render_prompt(const EndpointProfile& profile, std::string_view question, std::string_view accumulated);

// Single-pass substitution of named placeholders such as "{question}".
// Placeholder text occurring inside substituted values is not expanded.
std::string fill_template(std::string_view tpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> values);

// Request shaped by the profile's sampling parameters.
CompletionRequest make_request(const EndpointProfile& profile, std::string prompt, int max_tokens);

// Completion endpoint abstraction. Implementations must be callable from
// many threads at once.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;

  // Validates the request, then dispatches. Throws ConfigError for an
  // invalid request without touching the endpoint.
  CompletionResult complete(const EndpointProfile& profile, const CompletionRequest& request) const;

 protected:
  virtual CompletionResult do_complete(const EndpointProfile& profile, const CompletionRequest& request) const = 0;
};

// Bounds the number of concurrent outbound requests across every client
// sharing it.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int max_in_flight = 32);

  class Guard {
   public:
    explicit Guard(InFlightLimiter& l) : l_(l) { l_.sem_.acquire(); }
    ~Guard() { l_.sem_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter& l_;
  };

  int capacity() const noexcept { return capacity_; }

 private:
  int capacity_;
  std::counting_semaphore<> sem_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
};

struct HttpOptions {
  RetryPolicy retry;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{600};
};

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(std::string_view base_url);

// Body for POST {base_url}/v1/completions.
json completion_request_body(const EndpointProfile& profile, const CompletionRequest& request);
// Reads the first choice; throws ProtocolError on a malformed body.
CompletionResult parse_completion_response(std::string_view body);

// Issues a POST with retry on transport errors only; returns the 2xx body.
std::string post_json(const std::string& base_url, const std::string& path, const json& body, const HttpOptions& options,
                      InFlightLimiter* limiter);

// OpenAI-compatible /v1/completions client, one non-streaming request per call.
class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(std::shared_ptr<InFlightLimiter> limiter = nullptr, HttpOptions options = {});

 protected:
  CompletionResult do_complete(const EndpointProfile& profile, const CompletionRequest& request) const override;

 private:
  std::shared_ptr<InFlightLimiter> limiter_;
  HttpOptions options_;
};

}  // namespace coopsynth
