// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coopsynth/core.hpp"
#include "coopsynth/gateway.hpp"

namespace coopsynth {

// Token type a generator is meant to produce. Also the per-unit label a
// predictor assigns.
enum class TokenType { Capability, Style };
using BoundaryTarget = TokenType;

std::string_view to_string(TokenType t) noexcept;
TokenType parse_token_type(std::string_view s);

// Teacher spans carry capability tokens, student spans carry style tokens.
inline TokenType target_for(Origin o) noexcept { return o == Origin::Teacher ? TokenType::Capability : TokenType::Style; }

struct LabeledUnit {
  std::size_t start = 0;  // code points
  std::size_t end = 0;
  TokenType label = TokenType::Capability;

  bool operator==(const LabeledUnit&) const = default;
};

struct BoundaryVerdict {
  std::size_t keep_prefix_chars = 0;
  std::optional<std::vector<LabeledUnit>> units;

  bool operator==(const BoundaryVerdict&) const = default;
};

// Offset of the first unit whose label differs from target, or text_length.
std::size_t keep_from_units(const std::vector<LabeledUnit>& units, TokenType target, std::size_t text_length);

// Throws ProtocolError if keep exceeds the text, units fail to tile it, or
// keep disagrees with the labels.
void check_verdict(const BoundaryVerdict& verdict, std::size_t text_length, TokenType target);

// Case-insensitive set of style words and multi-word phrases.
class StyleLexicon {
 public:
  StyleLexicon();  // built-in seed set
  explicit StyleLexicon(const std::vector<std::string>& entries);

  static const std::vector<std::string>& default_entries();

  // Longest phrase starting at words[at], in words; 0 when none matches.
  // `words` must already be normalized.
  std::size_t match(const std::vector<std::string>& words, std::size_t at) const;

  std::size_t size() const noexcept { return phrases_.size(); }

 private:
  std::set<std::vector<std::string>> phrases_;
  std::size_t longest_ = 0;
};

// Lowercases ASCII letters and strips leading/trailing ASCII punctuation.
std::string normalize_word(std::string_view word);

struct WordSpan {
  std::size_t start = 0;  // code points, first non-space character
  std::size_t end = 0;    // code points, one past the last non-space character
};

// Whitespace-delimited words of text.
std::vector<WordSpan> split_words(std::string_view text);

class BoundaryPredictor {
 public:
  virtual ~BoundaryPredictor() = default;
  virtual BoundaryVerdict predict(std::string_view text, TokenType target) const = 0;
};

// Deterministic word-scan predictor. A unit is one word (or one greedily
// matched phrase) plus the whitespace that follows it; the first unit also
// absorbs any leading whitespace, so units tile the text.
class LexiconPredictor final : public BoundaryPredictor {
 public:
  explicit LexiconPredictor(StyleLexicon lexicon = {}) : lexicon_(std::move(lexicon)) {}

  BoundaryVerdict predict(std::string_view text, TokenType target) const override;
  std::vector<LabeledUnit> label(std::string_view text) const;

  const StyleLexicon& lexicon() const noexcept { return lexicon_; }

 private:
  StyleLexicon lexicon_;
};

// Client for POST {url}/v1/label.
class RemotePredictor final : public BoundaryPredictor {
 public:
  RemotePredictor(std::string url, std::shared_ptr<InFlightLimiter> limiter = nullptr, HttpOptions options = {});

  BoundaryVerdict predict(std::string_view text, TokenType target) const override;

 private:
  std::string url_;
  std::shared_ptr<InFlightLimiter> limiter_;
  HttpOptions options_;
};

json label_request_body(std::string_view text, TokenType target);
BoundaryVerdict parse_label_response(std::string_view body);
json verdict_to_json(const BoundaryVerdict& verdict);

std::unique_ptr<BoundaryPredictor> make_predictor(const PredictorSelector& selector,
                                                  std::shared_ptr<InFlightLimiter> limiter = nullptr,
                                                  HttpOptions options = {});

// Rejects empty text, then validates whatever the predictor returned.
BoundaryVerdict predict_boundary(const BoundaryPredictor& predictor, std::string_view text, TokenType target);

struct Truncation {
  std::string retained;
  bool truncated = false;
};

// Keeps the first verdict.keep_prefix_chars code points of raw.
Truncation truncate_span(std::string_view raw, const BoundaryVerdict& verdict);

// Drops a trailing partial word: "compute the gc" -> "compute the ".
std::string trim_partial_word(std::string_view retained);

}  // namespace coopsynth
