// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "coopsynth/utf8.hpp"

namespace coopsynth {

void StrategySelector::validate() const {
  if (kind == Kind::TeacherMix && !(mix_ratio > 0.0 && mix_ratio < 1.0))
    throw ConfigError("teacher-mix ratio must be in (0, 1)");
  if (kind == Kind::RejectSampling && candidates < 2) throw ConfigError("reject-sampling needs at least 2 candidates");
}

std::string StrategySelector::name() const {
  switch (kind) {
    case Kind::Tessy:
      return "tessy";
    case Kind::TeacherOnly:
      return "teacher-only";
    case Kind::StudentOnly:
      return "student-only";
    case Kind::TeacherMix:
      return "teacher-mix";
    case Kind::RejectSampling:
      return "reject-sampling";
    case Kind::SelfDistillation:
      return "self-distillation";
    case Kind::TeacherAnswer:
      return "teacher-answer";
    case Kind::TeacherThink:
      return "teacher-think";
  }
  return "tessy";
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"tessy",           "teacher-only",      "student-only",   "teacher-mix",
                                                 "reject-sampling", "self-distillation", "teacher-answer", "teacher-think"};
  return names;
}

StrategySelector parse_strategy(std::string_view name, const SynthesisConfig& config) {
  using K = StrategySelector::Kind;
  static const std::pair<std::string_view, K> table[] = {
      {"tessy", K::Tessy},
      {"teacher-only", K::TeacherOnly},
      {"student-only", K::StudentOnly},
      {"teacher-mix", K::TeacherMix},
      {"reject-sampling", K::RejectSampling},
      {"self-distillation", K::SelfDistillation},
      {"teacher-answer", K::TeacherAnswer},
      {"teacher-think", K::TeacherThink},
  };
  for (const auto& [n, k] : table) {
    if (n != name) continue;
    StrategySelector s{k, config.mix_ratio, config.reject_candidates};
    s.validate();
    return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void TrajectoryState::append(Origin origin, Role role, std::string text, bool truncated, std::size_t raw_length_chars) {
  const std::size_t len = utf8::length(text);
  if (role == Role::Think) {
    think_chars_used += len;
    consecutive_empty = len == 0 ? consecutive_empty + 1 : 0;
  }
  accumulated += text;
  spans_so_far.push_back(Span{origin, role, std::move(text), spans_so_far.size(), truncated, raw_length_chars});
}

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

int parse_score(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !(reply[i] >= '0' && reply[i] <= '9')) ++i;
  if (i == reply.size()) throw StrategyError("judge reply has no score: '" + std::string(reply) + "'");
  int v = 0;
  std::size_t digits = 0;
  while (i < reply.size() && reply[i] >= '0' && reply[i] <= '9' && digits < 3) {
    v = v * 10 + (reply[i] - '0');
    ++i;
    ++digits;
  }
  if (v < 1 || v > 10) throw StrategyError("judge score out of range: " + std::to_string(v));
  return v;
}

std::uint64_t item_seed(std::uint64_t seed, std::string_view id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

namespace {

// End offset (bytes, into raw) of the first end-of-think marker in
// accumulated+raw that is not wholly inside accumulated.
std::optional<std::size_t> find_marker(std::string_view accumulated, std::string_view raw, std::string_view marker) {
  const std::size_t tail = std::min(accumulated.size(), marker.size() - 1);
  std::string joined(accumulated.substr(accumulated.size() - tail));
  joined += raw;
  const auto pos = joined.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  return pos + marker.size() - tail;
}

std::string first_word(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && utf8::is_space(raw[i])) ++i;
  while (i < raw.size() && !utf8::is_space(raw[i])) ++i;
  return std::string(raw.substr(0, i));
}

}  // namespace

Engine::Engine(SynthesisConfig config, std::shared_ptr<const CompletionClient> client,
               std::shared_ptr<const BoundaryPredictor> student_predictor,
               std::shared_ptr<const BoundaryPredictor> teacher_predictor)
    : config_(std::move(config)),
      client_(std::move(client)),
      student_predictor_(std::move(student_predictor)),
      teacher_predictor_(std::move(teacher_predictor)) {
  validate(config_);
  if (!client_ || !student_predictor_ || !teacher_predictor_) throw ConfigError("engine needs a client and two predictors");
  fingerprint_ = fingerprint(config_);
}

Engine Engine::from_config(SynthesisConfig config, std::shared_ptr<const CompletionClient> client,
                           std::shared_ptr<InFlightLimiter> limiter, HttpOptions options) {
  std::shared_ptr<const BoundaryPredictor> sp = make_predictor(config.student_predictor, limiter, options);
  std::shared_ptr<const BoundaryPredictor> tp = make_predictor(config.teacher_predictor, limiter, options);
  return Engine(std::move(config), std::move(client), std::move(sp), std::move(tp));
}

CompletionResult Engine::call(Origin who, std::string_view question, const TrajectoryState& state, int max_tokens) const {
  const EndpointProfile& p = profile(who);
  return client_->complete(p, make_request(p, render_prompt(p, question, state.accumulated), max_tokens));
}

Termination Engine::alternate_think(std::string_view question, TrajectoryState& state, json& meta) const {
  const std::string& marker = config_.end_of_think_marker;
  const bool trim = config_.vocab_mismatch_trim && config_.student.vocab_family != config_.teacher.vocab_family;
  state.current_role = Origin::Student;

  while (true) {
    if (state.think_chars_used >= config_.think_budget_chars) return Termination::BudgetExhausted;

    const Origin who = state.current_role;
    const CompletionResult block = call(who, question, state, config_.k_max_tokens);
    const std::string& raw = block.text;
    const std::size_t raw_chars = utf8::length(raw);

    // The generator closed the think section itself; honor it wherever it is.
    if (auto cut = find_marker(state.accumulated, raw, marker)) {
      state.append(who, Role::Think, raw.substr(0, *cut), *cut < raw.size(), raw_chars);
      return Termination::EndOfThinkMarker;
    }
    if (block.finish_reason == FinishReason::EndpointStop) {
      if (!raw.empty()) state.append(who, Role::Think, raw, false, raw_chars);
      return Termination::EndpointStop;
    }
    if (raw.empty()) return Termination::EndpointStop;

    if (state.consecutive_empty >= config_.zero_progress_limit) {
      // Predictors keep cutting at zero: force one word through, no switch.
      std::string word = first_word(raw);
      const std::size_t n = utf8::length(word);
      meta["forced_progress_spans"].push_back(state.spans_so_far.size());
      state.append(who, Role::Think, std::move(word), false, n);
      continue;
    }

    const BoundaryVerdict verdict = predict_boundary(predictor(who), raw, target_for(who));
    Truncation t = truncate_span(raw, verdict);
    if (t.truncated && trim) t.retained = trim_partial_word(t.retained);
    state.append(who, Role::Think, std::move(t.retained), t.truncated, raw_chars);
    if (t.truncated) state.current_role = other(who);
  }
}

Termination Engine::single_think(std::string_view question, Origin who, TrajectoryState& state) const {
  state.current_role = who;
  while (true) {
    if (state.think_chars_used >= config_.think_budget_chars) return Termination::BudgetExhausted;
    const CompletionResult block = call(who, question, state, config_.single_block_tokens);
    const std::string& raw = block.text;
    if (auto cut = find_marker(state.accumulated, raw, config_.end_of_think_marker)) {
      state.append(who, Role::Think, raw.substr(0, *cut), *cut < raw.size(), utf8::length(raw));
      return Termination::EndOfThinkMarker;
    }
    if (!raw.empty()) state.append(who, Role::Think, raw, false, utf8::length(raw));
    if (block.finish_reason != FinishReason::Length || raw.empty()) return Termination::EndpointStop;
  }
}

void Engine::answer(std::string_view question, Origin who, TrajectoryState& state) const {
  state.phase = Phase::Answering;
  state.current_role = who;
  std::size_t used = 0;
  while (true) {
    const CompletionResult block = call(who, question, state, config_.answer_block_tokens);
    const std::size_t n = utf8::length(block.text);
    const bool empty = block.text.empty();
    state.append(who, Role::Answer, block.text, false, n);
    used += n;
    if (block.finish_reason != FinishReason::Length || empty || used >= config_.answer_budget_chars) break;
  }
  state.phase = Phase::Done;
}

SynthesisRecord Engine::make_record(std::string_view id, std::string_view prompt, std::string strategy,
                                    TrajectoryState&& state, Termination t, json meta) const {
  SynthesisRecord r;
  r.id = std::string(id);
  r.prompt = std::string(prompt);
  r.spans = std::move(state.spans_so_far);
  r.strategy = std::move(strategy);
  r.config_fingerprint = fingerprint_;
  r.terminated_by = t;
  r.meta = meta.is_object() ? std::move(meta) : json::object();
  return r;
}

SynthesisRecord Engine::synthesize_tessy(std::string_view id, std::string_view prompt) const {
  TrajectoryState state;
  json meta = json::object();
  Termination t = Termination::EndpointStop;
  try {
    t = alternate_think(prompt, state, meta);
    answer(prompt, Origin::Student, state);
  } catch (const TrajectoryError&) {
    throw;
  } catch (const Error& e) {
    throw TrajectoryError(e.what(), make_record(id, prompt, "tessy", std::move(state), t, meta));
  }
  return make_record(id, prompt, "tessy", std::move(state), t, std::move(meta));
}

SynthesisRecord Engine::single_origin(std::string_view id, std::string_view prompt, std::string_view question, Origin thinker,
                                      Origin answerer, std::string strategy) const {
  TrajectoryState state;
  Termination t = Termination::EndpointStop;
  try {
    t = single_think(question, thinker, state);
    answer(question, answerer, state);
  } catch (const TrajectoryError&) {
    throw;
  } catch (const Error& e) {
    throw TrajectoryError(e.what(), make_record(id, prompt, strategy, std::move(state), t, json::object()));
  }
  return make_record(id, prompt, std::move(strategy), std::move(state), t, json::object());
}

SynthesisRecord Engine::synthesize_baseline(std::string_view id, std::string_view prompt, const StrategySelector& selector,
                                            std::uint64_t seed, const Judge* judge) const {
  selector.validate();
  using K = StrategySelector::Kind;
  const std::string name = selector.name();
  switch (selector.kind) {
    case K::Tessy:
      return synthesize_tessy(id, prompt);
    case K::TeacherOnly:
      return single_origin(id, prompt, prompt, Origin::Teacher, Origin::Teacher, name);
    case K::StudentOnly:
      return single_origin(id, prompt, prompt, Origin::Student, Origin::Student, name);
    case K::TeacherAnswer:
      return single_origin(id, prompt, prompt, Origin::Student, Origin::Teacher, name);
    case K::TeacherThink:
      return single_origin(id, prompt, prompt, Origin::Teacher, Origin::Student, name);

    case K::TeacherMix: {
      const double u = static_cast<double>(item_seed(seed, id) >> 11) * 0x1.0p-53;
      const Origin who = u < selector.mix_ratio ? Origin::Teacher : Origin::Student;
      SynthesisRecord r = single_origin(id, prompt, prompt, who, who, name);
      r.meta["mix_choice"] = std::string(to_string(who));
      return r;
    }

    case K::RejectSampling: {
      std::vector<SynthesisRecord> candidates;
      candidates.reserve(static_cast<std::size_t>(selector.candidates));
      for (int i = 0; i < selector.candidates; ++i)
        candidates.push_back(single_origin(id, prompt, prompt, Origin::Student, Origin::Student, name));
      JudgeVerdict verdict;
      try {
        verdict = judge ? (*judge)(prompt, candidates) : teacher_judge()(prompt, candidates);
      } catch (const StrategyError&) {
        throw;
      } catch (const std::exception& e) {
        throw StrategyError(std::string("judge failed: ") + e.what());
      }
      if (verdict.selected >= candidates.size())
        throw StrategyError("judge selected candidate " + std::to_string(verdict.selected) + " of " +
                            std::to_string(candidates.size()));
      SynthesisRecord r = std::move(candidates[verdict.selected]);
      r.meta["candidates"] = selector.candidates;
      r.meta["selected_candidate"] = verdict.selected;
      if (!verdict.scores.empty()) r.meta["candidate_scores"] = verdict.scores;
      return r;
    }

    case K::SelfDistillation: {
      const SynthesisRecord reference = single_origin(id, prompt, prompt, Origin::Teacher, Origin::Teacher, name);
      const std::string ref = answer_text(reference);
      const std::string guided =
          fill_template(config_.self_distill_template, {{"{question}", prompt}, {"{reference}", ref}});
      SynthesisRecord r = single_origin(id, prompt, guided, Origin::Student, Origin::Student, name);
      r.meta["reference_answer"] = ref;
      return r;
    }
  }
  throw ConfigError("unhandled strategy");
}

SynthesisRecord Engine::synthesize(std::string_view id, std::string_view prompt, const StrategySelector& selector,
                                   std::uint64_t seed, const Judge* judge) const {
  if (selector.kind == StrategySelector::Kind::Tessy) return synthesize_tessy(id, prompt);
  return synthesize_baseline(id, prompt, selector, seed, judge);
}

Judge Engine::teacher_judge() const {
  return [this](std::string_view prompt, std::span<const SynthesisRecord> candidates) {
    JudgeVerdict v;
    for (const auto& c : candidates) {
      const std::string response = reconstruct(c);
      const std::string q =
          fill_template(config_.judge_prompt_template, {{"{question}", prompt}, {"{response}", response}});
      const EndpointProfile& p = config_.teacher;
      const CompletionResult r = client_->complete(p, make_request(p, render_prompt(p, q, ""), config_.judge_max_tokens));
      v.scores.push_back(parse_score(r.text));
    }
    v.selected = argmax_lowest(v.scores);
    return v;
  };
}

// ---------------------------------------------------------------------------

std::vector<BatchOutcome> run_batch(const Engine& engine, std::span<const BatchItem> items, const StrategySelector& selector,
                                    int parallelism, std::uint64_t seed, const Judge* judge) {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  std::vector<BatchOutcome> out(items.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      BatchOutcome& o = out[i];
      o.id = items[i].id;
      try {
        o.record = engine.synthesize(items[i].id, items[i].prompt, selector, seed, judge);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), items.size());
  if (n_threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  threads.clear();
  return out;
}

}  // namespace coopsynth
