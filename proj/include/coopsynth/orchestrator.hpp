// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopsynth/boundary.hpp"
#include "coopsynth/core.hpp"
#include "coopsynth/gateway.hpp"

namespace coopsynth {

struct StrategySelector {
  enum class Kind { Tessy, TeacherOnly, StudentOnly, TeacherMix, RejectSampling, SelfDistillation, TeacherAnswer, TeacherThink };

  Kind kind = Kind::Tessy;
  double mix_ratio = 0.5;  // TeacherMix: probability of a teacher-only sample
  int candidates = 5;      // RejectSampling

  static StrategySelector tessy() { return {Kind::Tessy}; }
  static StrategySelector teacher_mix(double ratio) { return {Kind::TeacherMix, ratio}; }
  static StrategySelector reject_sampling(int n) { return {Kind::RejectSampling, 0.5, n}; }
  static StrategySelector of(Kind k) { return {k}; }

  // Throws ConfigError on a ratio outside (0,1) or fewer than 2 candidates.
  void validate() const;
  std::string name() const;
};

// Strategy by CLI name ("tessy", "teacher-only", "teacher-mix", ...); ratio
// and candidate count come from the config. Throws ConfigError on an
// unknown name.
StrategySelector parse_strategy(std::string_view name, const SynthesisConfig& config);
const std::vector<std::string>& strategy_names();

enum class Phase { Thinking, Answering, Done };

// Trajectory under construction. Owned by exactly one task.
struct TrajectoryState {
  std::string accumulated;  // concatenation of spans_so_far texts
  Origin current_role = Origin::Student;
  std::vector<Span> spans_so_far;
  int consecutive_empty = 0;
  std::size_t think_chars_used = 0;
  Phase phase = Phase::Thinking;

  void append(Origin origin, Role role, std::string text, bool truncated, std::size_t raw_length_chars);
};

// A trajectory failed after retries; carries whatever had been produced.
class TrajectoryError : public Error {
 public:
  TrajectoryError(const std::string& what, SynthesisRecord partial) : Error(what), partial_(std::move(partial)) {}
  const SynthesisRecord& partial() const noexcept { return partial_; }

 private:
  SynthesisRecord partial_;
};

struct JudgeVerdict {
  std::size_t selected = 0;
  std::vector<double> scores;  // optional, one per candidate
};

// Ranks RejectSampling candidates for one prompt.
using Judge = std::function<JudgeVerdict(std::string_view prompt, std::span<const SynthesisRecord> candidates)>;

// Picks the highest score; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

// First integer in [1, 10] in the judge's reply. Throws StrategyError otherwise.
int parse_score(std::string_view reply);

class Engine {
 public:
  Engine(SynthesisConfig config, std::shared_ptr<const CompletionClient> client,
         std::shared_ptr<const BoundaryPredictor> student_predictor,
         std::shared_ptr<const BoundaryPredictor> teacher_predictor);

  // Builds predictors from the config's selectors; remote predictors share
  // the given limiter with the completion client.
  static Engine from_config(SynthesisConfig config, std::shared_ptr<const CompletionClient> client,
                            std::shared_ptr<InFlightLimiter> limiter = nullptr, HttpOptions options = {});

  // Alternating student/teacher generation with boundary rollback.
  SynthesisRecord synthesize_tessy(std::string_view id, std::string_view prompt) const;

  // Baseline strategies. `seed` drives the TeacherMix coin; `judge`
  // defaults to teacher scoring for RejectSampling.
  SynthesisRecord synthesize_baseline(std::string_view id, std::string_view prompt, const StrategySelector& selector,
                                      std::uint64_t seed = 0, const Judge* judge = nullptr) const;

  SynthesisRecord synthesize(std::string_view id, std::string_view prompt, const StrategySelector& selector,
                             std::uint64_t seed = 0, const Judge* judge = nullptr) const;

  // Teacher scores each candidate 1-10 with judge_prompt_template.
  Judge teacher_judge() const;

  const SynthesisConfig& config() const noexcept { return config_; }
  const std::string& config_fingerprint() const noexcept { return fingerprint_; }

 private:
  struct PhaseResult {
    Termination terminated_by = Termination::EndOfThinkMarker;
  };

  const EndpointProfile& profile(Origin o) const { return o == Origin::Teacher ? config_.teacher : config_.student; }
  const BoundaryPredictor& predictor(Origin o) const {
    return o == Origin::Teacher ? *teacher_predictor_ : *student_predictor_;
  }
  CompletionResult call(Origin who, std::string_view question, const TrajectoryState& state, int max_tokens) const;

  Termination alternate_think(std::string_view question, TrajectoryState& state, json& meta) const;
  Termination single_think(std::string_view question, Origin who, TrajectoryState& state) const;
  void answer(std::string_view question, Origin who, TrajectoryState& state) const;

  SynthesisRecord single_origin(std::string_view id, std::string_view prompt, std::string_view question, Origin thinker,
                                Origin answerer, std::string strategy) const;
  SynthesisRecord make_record(std::string_view id, std::string_view prompt, std::string strategy,
                              TrajectoryState&& state, Termination t, json meta) const;

  SynthesisConfig config_;
  std::string fingerprint_;
  std::shared_ptr<const CompletionClient> client_;
  std::shared_ptr<const BoundaryPredictor> student_predictor_;
  std::shared_ptr<const BoundaryPredictor> teacher_predictor_;
};

struct BatchItem {
  std::string id;
  std::string prompt;
};

struct BatchOutcome {
  std::string id;
  std::optional<SynthesisRecord> record;
  std::string error;  // set when record is empty

  bool ok() const noexcept { return record.has_value(); }
};

// Runs every item with at most `parallelism` trajectories in flight.
// Outcomes come back in input order; a failed item never aborts the batch.
std::vector<BatchOutcome> run_batch(const Engine& engine, std::span<const BatchItem> items, const StrategySelector& selector,
                                    int parallelism, std::uint64_t seed = 0, const Judge* judge = nullptr);

// Per-item seed for strategies that flip coins; independent of scheduling.
std::uint64_t item_seed(std::uint64_t seed, std::string_view id);

}  // namespace coopsynth
