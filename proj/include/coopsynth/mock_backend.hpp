// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopsynth/boundary.hpp"
#include "coopsynth/core.hpp"
#include "coopsynth/gateway.hpp"

namespace coopsynth {

// Test double for completion endpoints, shared by the in-process client
// and the mock-serve fixture server.
//
// Requests are routed in this order:
//   1. annotation prompts (contain an <input_text> block) get the lexicon's
//      style phrases back as a JSON array;
//   2. judge prompts (contain "\nScore:") get a deterministic 1-10 score;
//   3. prompts containing a scripted trajectory's question consume the next
//      entry for the requesting model's role;
//   4. everything else falls through to the procedural generator, a pure
//      function of (model, prompt, max_tokens).

struct MockEntry {
  Origin role = Origin::Student;
  std::string text;
  std::optional<FinishReason> finish;  // overrides the inferred reason
};

struct MockTrajectory {
  std::string question;
  std::vector<MockEntry> entries;
  bool fail = false;  // every call answers with HTTP 500
};

struct ProceduralSettings {
  double student_style_rate = 0.7;
  double teacher_style_rate = 0.15;
  double end_of_think_rate = 0.02;  // per think token
  double answer_stop_rate = 0.08;   // per answer token
  std::size_t max_think_prompt_chars = 6000;
  std::size_t max_answer_chars = 400;
};

struct MockScript {
  std::map<std::string, Origin> models;  // model name -> role
  std::vector<MockTrajectory> trajectories;
  std::optional<ProceduralSettings> procedural = ProceduralSettings{};
  std::string end_of_think_marker = "</think>";
  std::vector<std::string> lexicon;  // empty: built-in seed set
};

MockScript mock_script_from_json(const json& j);
json to_json(const MockScript& script);

// Mock tokens: a run of whitespace followed by a run of non-whitespace; a
// whitespace-only tail is a token of its own.
std::vector<std::string_view> mock_tokens(std::string_view text);

class MockBackend {
 public:
  explicit MockBackend(MockScript script);

  // Throws EndpointError(500) for failing trajectories.
  CompletionResult complete(std::string_view model, std::string_view prompt, int max_tokens);

  Origin role_of(std::string_view model) const;
  void reset();
  const MockScript& script() const noexcept { return script_; }
  const LexiconPredictor& predictor() const noexcept { return predictor_; }

 private:
  CompletionResult procedural(Origin role, std::string_view model, std::string_view prompt, int max_tokens) const;
  std::optional<std::string> annotate(std::string_view prompt) const;

  MockScript script_;
  LexiconPredictor predictor_;
  std::mutex mu_;
  // (trajectory, role) -> next entry position among that role's entries
  std::map<std::pair<std::size_t, Origin>, std::size_t> cursors_;
};

class MockCompletionClient final : public CompletionClient {
 public:
  explicit MockCompletionClient(std::shared_ptr<MockBackend> backend) : backend_(std::move(backend)) {}

  MockBackend& backend() const noexcept { return *backend_; }

 protected:
  CompletionResult do_complete(const EndpointProfile& profile, const CompletionRequest& request) const override;

 private:
  std::shared_ptr<MockBackend> backend_;
};

}  // namespace coopsynth
