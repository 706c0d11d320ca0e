// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coopsynth/errors.hpp"

namespace coopsynth {

using json = nlohmann::json;

// Which model produced a piece of text.
enum class Origin { Student, Teacher };

enum class Role { Think, Answer };

// Why the think phase ended.
enum class Termination { EndOfThinkMarker, BudgetExhausted, EndpointStop };

std::string_view to_string(Origin o) noexcept;
std::string_view to_string(Role r) noexcept;
std::string_view to_string(Termination t) noexcept;
Origin parse_origin(std::string_view s);
Role parse_role(std::string_view s);
Termination parse_termination(std::string_view s);

inline Origin other(Origin o) noexcept {
  return o == Origin::Student ? Origin::Teacher : Origin::Student;
}

// One contiguous run of synthesized text. Lengths are in code points.
struct Span {
  Origin origin = Origin::Student;
  Role role = Role::Think;
  std::string text;
  std::size_t index = 0;
  bool truncated = false;
  std::size_t raw_length_chars = 0;

  bool operator==(const Span&) const = default;
};

struct SynthesisRecord {
  std::string id;
  std::string prompt;
  std::vector<Span> spans;
  std::string strategy;
  std::string config_fingerprint;
  Termination terminated_by = Termination::EndOfThinkMarker;
  json meta = json::object();

  bool operator==(const SynthesisRecord&) const = default;
};

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 1.0;

  bool operator==(const SamplingParams&) const = default;
};

// Placeholders recognised in EndpointProfile::prompt_template.
inline constexpr std::string_view kBodyPlaceholder = "{body}";
inline constexpr std::string_view kQuestionPlaceholder = "{question}";

struct EndpointProfile {
  std::string base_url;
  std::string model_name;
  // Must contain {body} exactly once; may contain {question} at most once.
  std::string prompt_template = "{question}\n{body}";
  SamplingParams sampling;
  std::string vocab_family;

  bool operator==(const EndpointProfile&) const = default;
};

struct PredictorSelector {
  enum class Kind { Lexicon, Remote };
  Kind kind = Kind::Lexicon;
  std::string url;                   // Remote only
  std::vector<std::string> lexicon;  // Lexicon only; empty means the built-in seed set

  bool operator==(const PredictorSelector&) const = default;
};

struct SynthesisConfig {
  int k_max_tokens = 20;
  std::size_t think_budget_chars = 160000;
  std::string end_of_think_marker = "</think>";
  bool vocab_mismatch_trim = true;
  int zero_progress_limit = 2;

  // Block size for answer generation and for single-generator think phases.
  int answer_block_tokens = 1024;
  std::size_t answer_budget_chars = 32000;
  int single_block_tokens = 1024;
  int max_in_flight = 32;

  EndpointProfile student;
  EndpointProfile teacher;
  PredictorSelector student_predictor;
  PredictorSelector teacher_predictor;

  // Baseline strategy knobs.
  double mix_ratio = 0.5;
  int reject_candidates = 5;
  std::string judge_prompt_template =
      "Rate the quality of the following response to the question on a scale "
      "from 1 to 10. Reply with a single integer.\n\nQuestion:\n{question}\n\n"
      "Response:\n{response}\n\nScore:";
  int judge_max_tokens = 16;
  std::string self_distill_template =
      "{question}\n\nA reference answer is given below. Use it to guide your "
      "reasoning.\n\nReference answer:\n{reference}";
  int annotation_max_tokens = 1024;

  bool operator==(const SynthesisConfig&) const = default;
};

SynthesisConfig default_config();

// Throws ConfigError naming the first violated invariant.
void validate(const SynthesisConfig& config);
void validate(const EndpointProfile& profile, std::string_view which);

// Canonical JSON form: every field present, keys sorted.
json to_json(const SynthesisConfig& config);
// Missing keys take defaults; unknown keys are rejected.
SynthesisConfig config_from_json(const json& j);

// Stable hex digest of the canonical serialization.
std::string fingerprint(const SynthesisConfig& config);

// Concatenation of all span texts in order. Throws StructuralError when
// span indices are not 0, 1, 2, ...
std::string reconstruct(const SynthesisRecord& record);

std::string think_text(const SynthesisRecord& record);
std::string answer_text(const SynthesisRecord& record);

// [start, end) code-point range of each span within the reconstruction.
std::vector<std::pair<std::size_t, std::size_t>> span_ranges(const SynthesisRecord& record);

// Invariant audit. Returns one message per violation, each prefixed with
// the invariant's name; empty when the record is well formed.
std::vector<std::string> audit(const SynthesisRecord& record, std::string_view end_of_think_marker = "</think>");

}  // namespace coopsynth
