// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/core.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <set>

#include "coopsynth/utf8.hpp"

namespace coopsynth {

std::string_view to_string(Origin o) noexcept { return o == Origin::Student ? "student" : "teacher"; }

std::string_view to_string(Role r) noexcept { return r == Role::Think ? "think" : "answer"; }

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::EndOfThinkMarker:
      return "end_of_think_marker";
    case Termination::BudgetExhausted:
      return "budget_exhausted";
    case Termination::EndpointStop:
      return "endpoint_stop";
  }
  return "endpoint_stop";
}

Origin parse_origin(std::string_view s) {
  if (s == "student") return Origin::Student;
  if (s == "teacher") return Origin::Teacher;
  throw StructuralError("unknown origin '" + std::string(s) + "'");
}

Role parse_role(std::string_view s) {
  if (s == "think") return Role::Think;
  if (s == "answer") return Role::Answer;
  throw StructuralError("unknown role '" + std::string(s) + "'");
}

Termination parse_termination(std::string_view s) {
  if (s == "end_of_think_marker") return Termination::EndOfThinkMarker;
  if (s == "budget_exhausted") return Termination::BudgetExhausted;
  if (s == "endpoint_stop") return Termination::EndpointStop;
  throw StructuralError("unknown termination '" + std::string(s) + "'");
}

SynthesisConfig default_config() {
  SynthesisConfig c;
  c.student.model_name = "student";
  c.student.vocab_family = "student";
  c.teacher.model_name = "teacher";
  c.teacher.vocab_family = "teacher";
  return c;
}

namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace

void validate(const EndpointProfile& p, std::string_view which) {
  const std::string w(which);
  if (p.model_name.empty()) throw ConfigError(w + ".model_name must be non-empty");
  if (count_occurrences(p.prompt_template, kBodyPlaceholder) != 1)
    throw ConfigError(w + ".prompt_template must contain {body} exactly once");
  if (count_occurrences(p.prompt_template, kQuestionPlaceholder) > 1)
    throw ConfigError(w + ".prompt_template may contain {question} at most once");
  if (!(p.sampling.temperature >= 0.0)) throw ConfigError(w + ".sampling.temperature must be >= 0");
  if (!(p.sampling.top_p > 0.0 && p.sampling.top_p <= 1.0)) throw ConfigError(w + ".sampling.top_p must be in (0, 1]");
}

void validate(const SynthesisConfig& c) {
  if (c.k_max_tokens < 1) throw ConfigError("k_max_tokens must be >= 1");
  if (c.zero_progress_limit < 1) throw ConfigError("zero_progress_limit must be >= 1");
  if (c.end_of_think_marker.empty()) throw ConfigError("end_of_think_marker must be non-empty");
  if (c.think_budget_chars < 1) throw ConfigError("think_budget_chars must be >= 1");
  if (c.answer_block_tokens < 1) throw ConfigError("answer_block_tokens must be >= 1");
  if (c.answer_budget_chars < 1) throw ConfigError("answer_budget_chars must be >= 1");
  if (c.single_block_tokens < 1) throw ConfigError("single_block_tokens must be >= 1");
  if (c.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (!(c.mix_ratio > 0.0 && c.mix_ratio < 1.0)) throw ConfigError("mix_ratio must be in (0, 1)");
  if (c.reject_candidates < 2) throw ConfigError("reject_candidates must be >= 2");
  if (c.judge_max_tokens < 1) throw ConfigError("judge_max_tokens must be >= 1");
  if (c.annotation_max_tokens < 1) throw ConfigError("annotation_max_tokens must be >= 1");
  validate(c.student, "student");
  validate(c.teacher, "teacher");
  for (const auto* sel : {&c.student_predictor, &c.teacher_predictor}) {
    if (sel->kind == PredictorSelector::Kind::Remote && sel->url.empty())
      throw ConfigError("remote predictor requires a url");
  }
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

json profile_to_json(const EndpointProfile& p) {
  return json{{"base_url", p.base_url},
              {"model_name", p.model_name},
              {"prompt_template", p.prompt_template},
              {"sampling", {{"temperature", p.sampling.temperature}, {"top_p", p.sampling.top_p}}},
              {"vocab_family", p.vocab_family}};
}

json selector_to_json(const PredictorSelector& s) {
  return json{{"kind", s.kind == PredictorSelector::Kind::Lexicon ? "lexicon" : "remote"},
              {"url", s.url},
              {"lexicon", s.lexicon}};
}

// Strict object reader: every key must be consumed by a get() call.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + path_ + "." + it.key());
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_profile(const json& j, const std::string& path, EndpointProfile& p) {
  ObjectReader r(j, path);
  r.get("base_url", p.base_url);
  r.get("model_name", p.model_name);
  r.get("prompt_template", p.prompt_template);
  r.get("vocab_family", p.vocab_family);
  if (const json* s = r.child("sampling")) {
    ObjectReader rs(*s, path + ".sampling");
    rs.get("temperature", p.sampling.temperature);
    rs.get("top_p", p.sampling.top_p);
    rs.finish();
  }
  r.finish();
}

void read_selector(const json& j, const std::string& path, PredictorSelector& s) {
  ObjectReader r(j, path);
  std::string kind = s.kind == PredictorSelector::Kind::Lexicon ? "lexicon" : "remote";
  r.get("kind", kind);
  if (kind == "lexicon") {
    s.kind = PredictorSelector::Kind::Lexicon;
  } else if (kind == "remote") {
    s.kind = PredictorSelector::Kind::Remote;
  } else {
    throw ConfigError(path + ".kind must be \"lexicon\" or \"remote\"");
  }
  r.get("url", s.url);
  r.get("lexicon", s.lexicon);
  r.finish();
}

}  // namespace

json to_json(const SynthesisConfig& c) {
  return json{{"k_max_tokens", c.k_max_tokens},
              {"think_budget_chars", c.think_budget_chars},
              {"end_of_think_marker", c.end_of_think_marker},
              {"vocab_mismatch_trim", c.vocab_mismatch_trim},
              {"zero_progress_limit", c.zero_progress_limit},
              {"answer_block_tokens", c.answer_block_tokens},
              {"answer_budget_chars", c.answer_budget_chars},
              {"single_block_tokens", c.single_block_tokens},
              {"max_in_flight", c.max_in_flight},
              {"student", profile_to_json(c.student)},
              {"teacher", profile_to_json(c.teacher)},
              {"student_predictor", selector_to_json(c.student_predictor)},
              {"teacher_predictor", selector_to_json(c.teacher_predictor)},
              {"mix_ratio", c.mix_ratio},
              {"reject_candidates", c.reject_candidates},
              {"judge_prompt_template", c.judge_prompt_template},
              {"judge_max_tokens", c.judge_max_tokens},
              {"self_distill_template", c.self_distill_template},
              {"annotation_max_tokens", c.annotation_max_tokens}};
}

SynthesisConfig config_from_json(const json& j) {
  SynthesisConfig c = default_config();
  ObjectReader r(j, "config");
  r.get("k_max_tokens", c.k_max_tokens);
  r.get("think_budget_chars", c.think_budget_chars);
  r.get("end_of_think_marker", c.end_of_think_marker);
  r.get("vocab_mismatch_trim", c.vocab_mismatch_trim);
  r.get("zero_progress_limit", c.zero_progress_limit);
  r.get("answer_block_tokens", c.answer_block_tokens);
  r.get("answer_budget_chars", c.answer_budget_chars);
  r.get("single_block_tokens", c.single_block_tokens);
  r.get("max_in_flight", c.max_in_flight);
  if (const json* s = r.child("student")) read_profile(*s, "config.student", c.student);
  if (const json* s = r.child("teacher")) read_profile(*s, "config.teacher", c.teacher);
  if (const json* s = r.child("student_predictor")) read_selector(*s, "config.student_predictor", c.student_predictor);
  if (const json* s = r.child("teacher_predictor")) read_selector(*s, "config.teacher_predictor", c.teacher_predictor);
  r.get("mix_ratio", c.mix_ratio);
  r.get("reject_candidates", c.reject_candidates);
  r.get("judge_prompt_template", c.judge_prompt_template);
  r.get("judge_max_tokens", c.judge_max_tokens);
  r.get("self_distill_template", c.self_distill_template);
  r.get("annotation_max_tokens", c.annotation_max_tokens);
  r.finish();
  return c;
}

std::string fingerprint(const SynthesisConfig& config) {
  // nlohmann::json objects are std::map backed, so dump() emits sorted keys
  // and shortest round-trip number formatting.
  const std::string canonical = to_json(config).dump();
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::string hex;
  hex.reserve(32);
  char buf[3];
  for (unsigned int i = 0; i < 16 && i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Records

namespace {

void check_indices(const SynthesisRecord& record) {
  for (std::size_t i = 0; i < record.spans.size(); ++i) {
    if (record.spans[i].index != i)
      throw StructuralError("record " + record.id + ": span at position " + std::to_string(i) + " has index " +
                            std::to_string(record.spans[i].index));
  }
}

std::string join_role(const SynthesisRecord& record, Role role) {
  std::string out;
  for (const auto& s : record.spans)
    if (s.role == role) out += s.text;
  return out;
}

}  // namespace

std::string reconstruct(const SynthesisRecord& record) {
  check_indices(record);
  std::string out;
  for (const auto& s : record.spans) out += s.text;
  return out;
}

std::string think_text(const SynthesisRecord& record) { return join_role(record, Role::Think); }

std::string answer_text(const SynthesisRecord& record) { return join_role(record, Role::Answer); }

std::vector<std::pair<std::size_t, std::size_t>> span_ranges(const SynthesisRecord& record) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(record.spans.size());
  std::size_t at = 0;
  for (const auto& s : record.spans) {
    const std::size_t n = utf8::length(s.text);
    ranges.emplace_back(at, at + n);
    at += n;
  }
  return ranges;
}

std::vector<std::string> audit(const SynthesisRecord& record, std::string_view marker) {
  std::vector<std::string> out;
  const auto& spans = record.spans;
  if (record.id.empty()) out.emplace_back("id: record id is empty");

  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    const std::string where = "span " + std::to_string(i);
    if (s.index != i) out.push_back("index: " + where + " has index " + std::to_string(s.index));
    const std::size_t len = utf8::length(s.text);
    if (len > s.raw_length_chars)
      out.push_back("raw_length: " + where + " text longer than raw_length_chars");
    if (s.truncated != (len < s.raw_length_chars))
      out.push_back("truncation_flag: " + where + " truncated flag disagrees with lengths");
    if (i > 0 && spans[i - 1].role == Role::Answer && s.role == Role::Think)
      out.push_back("role_monotonicity: " + where + " is think after an answer span");
  }

  if (!marker.empty()) {
    const std::string think = think_text(record);
    const std::size_t count = count_occurrences(think, marker);
    if (record.terminated_by == Termination::EndOfThinkMarker) {
      const bool at_end = think.size() >= marker.size() && think.compare(think.size() - marker.size(), marker.size(), marker) == 0;
      if (count != 1 || !at_end) out.emplace_back("marker_hygiene: end-of-think marker must appear once, at the end of the think text");
    } else if (count != 0) {
      out.emplace_back("marker_hygiene: marker present although think phase did not end on it");
    }
  }

  if (record.strategy == "tessy") {
    if (!spans.empty() && spans.front().origin != Origin::Student)
      out.emplace_back("first_span: first span must be student-generated");
    bool any_answer = false;
    for (const auto& s : spans) {
      if (s.role != Role::Answer) continue;
      any_answer = true;
      if (s.origin != Origin::Student)
        out.push_back("answer_origin: answer span " + std::to_string(s.index) + " is not student-generated");
    }
    if (!any_answer) out.emplace_back("answer_origin: record has no answer span");
    for (std::size_t i = 0; i + 1 < spans.size(); ++i) {
      if (spans[i].role != Role::Think || spans[i + 1].role != Role::Think) continue;
      const bool switched = spans[i].origin != spans[i + 1].origin;
      if (switched != spans[i].truncated)
        out.push_back("switch_iff_truncated: violated between spans " + std::to_string(i) + " and " + std::to_string(i + 1));
    }
  }
  return out;
}

}  // namespace coopsynth
