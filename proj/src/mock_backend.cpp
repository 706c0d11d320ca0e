// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/mock_backend.hpp"

#include <array>
#include <cstdint>

#include "coopsynth/utf8.hpp"

namespace coopsynth {
namespace {

constexpr std::array kStyleWords = {"Okay,", "so", "wait,", "hmm,", "let's", "but", "alright,", "now", "well,", "Hmm."};
constexpr std::array kCapabilityWords = {"compute", "gcd(a,", "b)",     "x",     "=",      "3;",      "sum",   "of",
                                         "the",     "array",  "mod",    "p.",    "if",     "n",       "is",    "even,",
                                         "return",  "dp[i]",  "+",      "1.",    "loop",   "over",    "indices", "prime",
                                         "factor",  "check",  "bound",  "value", "then",   "divide"};
constexpr std::array kAnswerWords = {"The", "answer", "is", "42.", "Output", "gcd", "value", "computed", "above.", "Final:",
                                     "x", "=", "7."};

constexpr std::string_view kInputOpen = "<input_text>\n";
constexpr std::string_view kInputClose = "\n</input_text>";

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  template <typename A>
  const char* pick(const A& pool) {
    return pool[next() % pool.size()];
  }

 private:
  std::uint64_t state_;
};

std::optional<FinishReason> parse_finish_override(const json& e) {
  auto it = e.find("finish");
  if (it == e.end() || it->is_null()) return std::nullopt;
  return parse_finish_reason(it->get<std::string>());
}

}  // namespace

std::vector<std::string_view> mock_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && utf8::is_space(text[j])) ++j;
    while (j < text.size() && !utf8::is_space(text[j])) ++j;
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

MockScript mock_script_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("mock script must be a JSON object");
  MockScript s;
  try {
    if (auto it = j.find("models"); it != j.end())
      for (auto m = it->begin(); m != it->end(); ++m) s.models[m.key()] = parse_origin(m->get<std::string>());
    if (auto it = j.find("trajectories"); it != j.end()) {
      for (const auto& t : *it) {
        MockTrajectory traj;
        traj.question = t.at("question").get<std::string>();
        traj.fail = t.value("fail", false);
        for (const auto& e : t.value("entries", json::array()))
          traj.entries.push_back({parse_origin(e.at("role").get<std::string>()), e.at("text").get<std::string>(),
                                  parse_finish_override(e)});
        s.trajectories.push_back(std::move(traj));
      }
    }
    if (auto it = j.find("procedural"); it != j.end()) {
      if (it->is_null() || (it->is_boolean() && !it->get<bool>())) {
        s.procedural.reset();
      } else if (it->is_object()) {
        ProceduralSettings p;
        p.student_style_rate = it->value("student_style_rate", p.student_style_rate);
        p.teacher_style_rate = it->value("teacher_style_rate", p.teacher_style_rate);
        p.end_of_think_rate = it->value("end_of_think_rate", p.end_of_think_rate);
        p.answer_stop_rate = it->value("answer_stop_rate", p.answer_stop_rate);
        p.max_think_prompt_chars = it->value("max_think_prompt_chars", p.max_think_prompt_chars);
        p.max_answer_chars = it->value("max_answer_chars", p.max_answer_chars);
        s.procedural = p;
      }
    }
    s.end_of_think_marker = j.value("end_of_think_marker", s.end_of_think_marker);
    s.lexicon = j.value("lexicon", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  }
  return s;
}

json to_json(const MockScript& s) {
  json models = json::object();
  for (const auto& [name, role] : s.models) models[name] = std::string(to_string(role));
  json trajectories = json::array();
  for (const auto& t : s.trajectories) {
    json entries = json::array();
    for (const auto& e : t.entries) {
      json je = {{"role", std::string(to_string(e.role))}, {"text", e.text}};
      if (e.finish) je["finish"] = std::string(to_string(*e.finish));
      entries.push_back(std::move(je));
    }
    trajectories.push_back({{"question", t.question}, {"fail", t.fail}, {"entries", std::move(entries)}});
  }
  json procedural = nullptr;
  if (s.procedural) {
    const auto& p = *s.procedural;
    procedural = {{"student_style_rate", p.student_style_rate}, {"teacher_style_rate", p.teacher_style_rate},
                  {"end_of_think_rate", p.end_of_think_rate},   {"answer_stop_rate", p.answer_stop_rate},
                  {"max_think_prompt_chars", p.max_think_prompt_chars}, {"max_answer_chars", p.max_answer_chars}};
  }
  return json{{"models", models},
              {"trajectories", trajectories},
              {"procedural", procedural},
              {"end_of_think_marker", s.end_of_think_marker},
              {"lexicon", s.lexicon}};
}

MockBackend::MockBackend(MockScript script)
    : script_(std::move(script)),
      predictor_(script_.lexicon.empty() ? StyleLexicon() : StyleLexicon(script_.lexicon)) {}

Origin MockBackend::role_of(std::string_view model) const {
  if (auto it = script_.models.find(std::string(model)); it != script_.models.end()) return it->second;
  return model.find("teacher") != std::string_view::npos ? Origin::Teacher : Origin::Student;
}

void MockBackend::reset() {
  std::lock_guard lock(mu_);
  cursors_.clear();
}

std::optional<std::string> MockBackend::annotate(std::string_view prompt) const {
  const auto open = prompt.find(kInputOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto from = open + kInputOpen.size();
  const auto close = prompt.find(kInputClose, from);
  if (close == std::string_view::npos) return std::nullopt;
  const std::string_view segment = prompt.substr(from, close - from);

  json spans = json::array();
  if (!segment.empty()) {
    const auto words = split_words(segment);
    for (const auto& unit : predictor_.label(segment)) {
      if (unit.label != TokenType::Style) continue;
      // Report the unit without its trailing whitespace.
      std::size_t last_end = unit.start;
      for (const auto& w : words)
        if (w.start >= unit.start && w.end <= unit.end) last_end = w.end;
      std::size_t first_start = unit.end;
      for (const auto& w : words)
        if (w.start >= unit.start && w.start < first_start) first_start = w.start;
      const auto b = utf8::byte_offset(segment, first_start);
      const auto e = utf8::byte_offset(segment, last_end);
      spans.push_back(std::string(segment.substr(b, e - b)));
    }
  }
  return spans.dump();
}

CompletionResult MockBackend::complete(std::string_view model, std::string_view prompt, int max_tokens) {
  if (auto ann = annotate(prompt)) return {*ann, FinishReason::Stop};
  if (prompt.find("\nScore:") != std::string_view::npos)
    return {" " + std::to_string(1 + fnv1a(prompt) % 10), FinishReason::Stop};

  const Origin role = role_of(model);
  std::optional<std::size_t> match;
  for (std::size_t i = 0; i < script_.trajectories.size(); ++i) {
    const auto& q = script_.trajectories[i].question;
    if (q.empty() || prompt.find(q) == std::string_view::npos) continue;
    if (!match || q.size() > script_.trajectories[*match].question.size()) match = i;
  }

  if (match) {
    const MockTrajectory& traj = script_.trajectories[*match];
    if (traj.fail) throw EndpointError(500, "scripted failure");
    const MockEntry* entry = nullptr;
    {
      std::lock_guard lock(mu_);
      std::size_t& cursor = cursors_[{*match, role}];
      std::size_t seen = 0;
      for (const auto& e : traj.entries) {
        if (e.role != role) continue;
        if (seen++ == cursor) {
          entry = &e;
          break;
        }
      }
      if (entry) ++cursor;
    }
    if (!entry) return {"", FinishReason::Stop};
    const auto tokens = mock_tokens(entry->text);
    const auto limit = static_cast<std::size_t>(max_tokens);
    CompletionResult r;
    if (tokens.size() >= limit) {
      for (std::size_t i = 0; i < limit; ++i) r.text += tokens[i];
      r.finish_reason = FinishReason::Length;
    } else {
      r.text = entry->text;
      r.finish_reason = FinishReason::Stop;
    }
    if (entry->finish) r.finish_reason = *entry->finish;
    return r;
  }

  if (!script_.procedural) throw EndpointError(404, "no scripted trajectory matches the prompt");
  return procedural(role, model, prompt, max_tokens);
}

CompletionResult MockBackend::procedural(Origin role, std::string_view model, std::string_view prompt, int max_tokens) const {
  const ProceduralSettings& p = *script_.procedural;
  SplitMix rng(fnv1a(prompt, fnv1a(model) ^ static_cast<std::uint64_t>(max_tokens)));
  const std::string& marker = script_.end_of_think_marker;
  std::string out;
  auto sep = [&] {
    const char last = !out.empty() ? out.back() : (!prompt.empty() ? prompt.back() : ' ');
    return utf8::is_space(last) ? "" : " ";
  };

  const auto marker_at = prompt.find(marker);
  if (marker_at == std::string_view::npos) {
    const double style_rate = role == Origin::Teacher ? p.teacher_style_rate : p.student_style_rate;
    for (int t = 0; t < max_tokens; ++t) {
      if (prompt.size() + out.size() >= p.max_think_prompt_chars || rng.uniform() < p.end_of_think_rate) {
        out += sep();
        out += marker;
        return {out, FinishReason::Stop};
      }
      const char* word = rng.uniform() < style_rate ? rng.pick(kStyleWords) : rng.pick(kCapabilityWords);
      out += sep();
      out += word;
    }
    return {out, FinishReason::Length};
  }

  const std::size_t answered = prompt.size() - (marker_at + marker.size());
  for (int t = 0; t < max_tokens; ++t) {
    if (answered + out.size() >= p.max_answer_chars) return {out, FinishReason::Stop};
    out += sep();
    out += rng.pick(kAnswerWords);
    if (rng.uniform() < p.answer_stop_rate) return {out, FinishReason::Stop};
  }
  return {out, FinishReason::Length};
}

CompletionResult MockCompletionClient::do_complete(const EndpointProfile& profile, const CompletionRequest& request) const {
  return backend_->complete(profile.model_name, request.prompt, request.max_tokens);
}

}  // namespace coopsynth
