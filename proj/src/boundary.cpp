// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/boundary.hpp"

#include <algorithm>

#include "coopsynth/utf8.hpp"

namespace coopsynth {

std::string_view to_string(TokenType t) noexcept { return t == TokenType::Style ? "style" : "capability"; }

TokenType parse_token_type(std::string_view s) {
  if (s == "style") return TokenType::Style;
  if (s == "capability") return TokenType::Capability;
  throw ProtocolError("unknown label '" + std::string(s) + "'");
}

std::size_t keep_from_units(const std::vector<LabeledUnit>& units, TokenType target, std::size_t text_length) {
  for (const auto& u : units)
    if (u.label != target) return u.start;
  return text_length;
}

void check_verdict(const BoundaryVerdict& verdict, std::size_t text_length, TokenType target) {
  if (verdict.keep_prefix_chars > text_length)
    throw ProtocolError("verdict keeps " + std::to_string(verdict.keep_prefix_chars) + " chars of a " +
                        std::to_string(text_length) + "-char text");
  if (!verdict.units) return;
  std::size_t at = 0;
  for (const auto& u : *verdict.units) {
    if (u.start != at || u.end <= u.start) throw ProtocolError("verdict units do not tile the text");
    at = u.end;
  }
  if (at != text_length) throw ProtocolError("verdict units do not cover the text");
  if (keep_from_units(*verdict.units, target, text_length) != verdict.keep_prefix_chars)
    throw ProtocolError("keep_prefix_chars disagrees with unit labels");
}

// ---------------------------------------------------------------------------
// Lexicon

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

std::vector<std::string> phrase_words(std::string_view entry) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < entry.size()) {
    while (i < entry.size() && utf8::is_space(entry[i])) ++i;
    std::size_t j = i;
    while (j < entry.size() && !utf8::is_space(entry[j])) ++j;
    if (j > i) words.push_back(normalize_word(entry.substr(i, j - i)));
    i = j;
  }
  return words;
}

}  // namespace

std::string normalize_word(std::string_view word) {
  std::size_t b = 0, e = word.size();
  while (b < e && is_ascii_punct(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && is_ascii_punct(static_cast<unsigned char>(word[e - 1]))) --e;
  std::string out(word.substr(b, e - b));
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

const std::vector<std::string>& StyleLexicon::default_entries() {
  static const std::vector<std::string> entries = {
      "okay", "ok", "wait", "hmm", "so", "let's", "but", "let me", "i think", "alright", "now", "well",
      "oh", "actually", "let's see", "let me see", "let me think", "i guess", "anyway", "right",
  };
  return entries;
}

StyleLexicon::StyleLexicon() : StyleLexicon(default_entries()) {}

StyleLexicon::StyleLexicon(const std::vector<std::string>& entries) {
  for (const auto& e : entries) {
    auto words = phrase_words(e);
    if (words.empty() || std::any_of(words.begin(), words.end(), [](const std::string& w) { return w.empty(); }))
      continue;
    longest_ = std::max(longest_, words.size());
    phrases_.insert(std::move(words));
  }
  if (phrases_.empty()) throw ConfigError("style lexicon is empty");
}

std::size_t StyleLexicon::match(const std::vector<std::string>& words, std::size_t at) const {
  const std::size_t avail = at < words.size() ? words.size() - at : 0;
  for (std::size_t n = std::min(longest_, avail); n > 0; --n) {
    std::vector<std::string> probe(words.begin() + static_cast<std::ptrdiff_t>(at),
                                   words.begin() + static_cast<std::ptrdiff_t>(at + n));
    if (phrases_.count(probe)) return n;
  }
  return 0;
}

std::vector<WordSpan> split_words(std::string_view text) {
  std::vector<WordSpan> out;
  std::size_t chars = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool lead = (c & 0xC0) != 0x80;
    if (!lead) continue;
    const bool space = utf8::is_space(static_cast<char>(c));
    if (!space && !in_word) {
      out.push_back({chars, chars});
      in_word = true;
    } else if (space && in_word) {
      out.back().end = chars;
      in_word = false;
    }
    ++chars;
  }
  if (in_word) out.back().end = chars;
  return out;
}

std::vector<LabeledUnit> LexiconPredictor::label(std::string_view text) const {
  const std::size_t length = utf8::length(text);
  const auto spans = split_words(text);
  if (spans.empty()) return {LabeledUnit{0, length, TokenType::Capability}};

  std::vector<std::string> norm;
  norm.reserve(spans.size());
  for (const auto& w : spans) {
    const auto b = utf8::byte_offset(text, w.start);
    const auto e = utf8::byte_offset(text, w.end);
    norm.push_back(normalize_word(text.substr(b, e - b)));
  }

  std::vector<LabeledUnit> units;
  std::size_t i = 0;
  while (i < spans.size()) {
    const std::size_t m = lexicon_.match(norm, i);
    const std::size_t take = m > 0 ? m : 1;
    const std::size_t start = units.empty() ? 0 : spans[i].start;
    const std::size_t next = i + take;
    const std::size_t end = next < spans.size() ? spans[next].start : length;
    units.push_back({start, end, m > 0 ? TokenType::Style : TokenType::Capability});
    i = next;
  }
  return units;
}

BoundaryVerdict LexiconPredictor::predict(std::string_view text, TokenType target) const {
  BoundaryVerdict v;
  v.units = label(text);
  v.keep_prefix_chars = keep_from_units(*v.units, target, utf8::length(text));
  return v;
}

// ---------------------------------------------------------------------------
// Remote

json label_request_body(std::string_view text, TokenType target) {
  return json{{"text", std::string(text)}, {"target", std::string(to_string(target))}};
}

BoundaryVerdict parse_label_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("label response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("label response is not an object");
  const auto keep = j.find("keep_prefix_chars");
  if (keep == j.end() || !keep->is_number_integer() || keep->get<long long>() < 0)
    throw ProtocolError("label response lacks a nonnegative keep_prefix_chars");
  BoundaryVerdict v;
  v.keep_prefix_chars = keep->get<std::size_t>();
  const auto units = j.find("units");
  if (units != j.end() && !units->is_null()) {
    if (!units->is_array()) throw ProtocolError("label response units is not an array");
    std::vector<LabeledUnit> out;
    for (const auto& u : *units) {
      if (!u.is_object() || !u.contains("start") || !u.contains("end") || !u.contains("label") ||
          !u["start"].is_number_integer() || !u["end"].is_number_integer() || !u["label"].is_string() ||
          u["start"].get<long long>() < 0 || u["end"].get<long long>() < 0)
        throw ProtocolError("malformed unit in label response");
      out.push_back({u["start"].get<std::size_t>(), u["end"].get<std::size_t>(),
                     parse_token_type(u["label"].get<std::string>())});
    }
    v.units = std::move(out);
  }
  return v;
}

json verdict_to_json(const BoundaryVerdict& verdict) {
  json j = {{"keep_prefix_chars", verdict.keep_prefix_chars}};
  if (verdict.units) {
    json units = json::array();
    for (const auto& u : *verdict.units)
      units.push_back({{"start", u.start}, {"end", u.end}, {"label", std::string(to_string(u.label))}});
    j["units"] = std::move(units);
  }
  return j;
}

RemotePredictor::RemotePredictor(std::string url, std::shared_ptr<InFlightLimiter> limiter, HttpOptions options)
    : url_(std::move(url)), limiter_(std::move(limiter)), options_(options) {}

BoundaryVerdict RemotePredictor::predict(std::string_view text, TokenType target) const {
  return parse_label_response(post_json(url_, "/v1/label", label_request_body(text, target), options_, limiter_.get()));
}

std::unique_ptr<BoundaryPredictor> make_predictor(const PredictorSelector& selector, std::shared_ptr<InFlightLimiter> limiter,
                                                  HttpOptions options) {
  if (selector.kind == PredictorSelector::Kind::Remote)
    return std::make_unique<RemotePredictor>(selector.url, std::move(limiter), options);
  if (selector.lexicon.empty()) return std::make_unique<LexiconPredictor>();
  return std::make_unique<LexiconPredictor>(StyleLexicon(selector.lexicon));
}

BoundaryVerdict predict_boundary(const BoundaryPredictor& predictor, std::string_view text, TokenType target) {
  if (text.empty()) throw StructuralError("boundary prediction needs non-empty text");
  BoundaryVerdict v = predictor.predict(text, target);
  check_verdict(v, utf8::length(text), target);
  return v;
}

// ---------------------------------------------------------------------------

Truncation truncate_span(std::string_view raw, const BoundaryVerdict& verdict) {
  const std::size_t length = utf8::length(raw);
  if (verdict.keep_prefix_chars > length)
    throw StructuralError("verdict keeps " + std::to_string(verdict.keep_prefix_chars) + " chars of a " +
                          std::to_string(length) + "-char span");
  Truncation t;
  t.retained = std::string(utf8::prefix(raw, verdict.keep_prefix_chars));
  t.truncated = verdict.keep_prefix_chars < length;
  return t;
}

std::string trim_partial_word(std::string_view retained) {
  if (retained.empty() || utf8::is_space(retained.back())) return std::string(retained);
  std::size_t i = retained.size();
  while (i > 0 && !utf8::is_space(retained[i - 1])) --i;
  return std::string(retained.substr(0, i));
}

}  // namespace coopsynth
