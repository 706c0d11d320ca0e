// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coopsynth/boundary.hpp"
#include "coopsynth/mock_server.hpp"
#include "coopsynth/utf8.hpp"
#include "test_util.hpp"

using namespace coopsynth;

namespace {

std::size_t offset_of(std::string_view text, std::string_view needle) {
  return utf8::char_offset(text, text.find(needle));
}

// Oracle: lowercase/strip each whitespace word, check membership in a set of
// one- and two-word phrases, first miss wins. Only covers lexica whose
// phrases are at most two words, which is all the tests below need.
std::size_t scan_oracle(const std::string& text, const std::set<std::string>& phrases, bool want_style) {
  std::vector<std::pair<std::size_t, std::string>> words;  // byte start, normalized
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    const std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::string w = text.substr(b, i - b);
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(0, 1);
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    words.emplace_back(b, w);
  }
  if (words.empty()) return want_style ? 0 : utf8::length(text);
  std::size_t k = 0;
  while (k < words.size()) {
    std::size_t n = 0;
    if (k + 1 < words.size() && phrases.count(words[k].second + " " + words[k + 1].second)) n = 2;
    else if (phrases.count(words[k].second)) n = 1;
    const bool style = n > 0;
    if (style != want_style) return k == 0 ? 0 : utf8::char_offset(text, words[k].first);
    k += std::max<std::size_t>(n, 1);
  }
  return utf8::length(text);
}

}  // namespace

TEST_CASE("lexicon predictor examples") {
  LexiconPredictor p;
  const std::string t1 = "Okay, let's compute the gcd of both values";
  CHECK(p.predict(t1, TokenType::Style).keep_prefix_chars == offset_of(t1, "compute"));
  const std::string t2 = "compute gcd(a,b) then reduce";
  CHECK(p.predict(t2, TokenType::Capability).keep_prefix_chars == utf8::length(t2));
  CHECK(p.predict("Wait, hmm.", TokenType::Capability).keep_prefix_chars == 0);
  CHECK(p.predict("Wait, hmm.", TokenType::Style).keep_prefix_chars == 10);
}

TEST_CASE("lexicon phrases match greedily") {
  LexiconPredictor p;
  const auto units = p.label("Let me think about x");
  REQUIRE(units.size() == 3);
  CHECK(units[0] == LabeledUnit{0, 13, TokenType::Style});
  CHECK(units[1].label == TokenType::Capability);
  CHECK(units[2] == LabeledUnit{19, 20, TokenType::Capability});
  CHECK(normalize_word("\"Okay,") == "okay");
  CHECK(normalize_word("...") == "");
  CHECK(StyleLexicon::default_entries().size() >= 10);
}

TEST_CASE("units tile the text including leading whitespace") {
  LexiconPredictor p;
  for (std::string t : {"  so x", "x", "   ", "a\n\nb  ", "é wait ∑"}) {
    const auto units = p.label(t);
    std::size_t at = 0;
    for (const auto& u : units) {
      CHECK(u.start == at);
      CHECK(u.end > u.start);
      at = u.end;
    }
    CHECK(at == utf8::length(t));
  }
  const auto ws = p.label("   ");
  REQUIRE(ws.size() == 1);
  CHECK(ws[0].label == TokenType::Capability);
}

TEST_CASE("lexicon predictor agrees with the word-scan oracle") {
  const std::vector<std::string> entries = {"okay", "wait", "so", "let me", "hmm", "but"};
  const std::set<std::string> phrases(entries.begin(), entries.end());
  LexiconPredictor p{StyleLexicon(entries)};
  const char* words[] = {"Okay,", "wait", "So", "let", "me", "Hmm...", "but", "x", "gcd(a,b)", "é", "me", "let"};
  const char* seps[] = {" ", "  ", "\n", "\t "};
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    std::string t = rng() % 4 == 0 ? " " : "";
    const int n = 1 + rng() % 10;
    for (int w = 0; w < n; ++w) {
      t += words[rng() % std::size(words)];
      if (w + 1 < n || rng() % 2) t += seps[rng() % std::size(seps)];
    }
    for (auto target : {TokenType::Style, TokenType::Capability}) {
      const auto v = p.predict(t, target);
      INFO(t);
      CHECK(v.keep_prefix_chars == scan_oracle(t, phrases, target == TokenType::Style));
      CHECK_NOTHROW(check_verdict(v, utf8::length(t), target));
    }
  }
}

TEST_CASE("check_verdict rejects inconsistent verdicts") {
  CHECK_THROWS_AS(check_verdict({5, std::nullopt}, 4, TokenType::Style), ProtocolError);
  std::vector<LabeledUnit> units = {{0, 2, TokenType::Style}, {2, 4, TokenType::Capability}};
  CHECK_NOTHROW(check_verdict({2, units}, 4, TokenType::Style));
  CHECK_THROWS_AS(check_verdict({4, units}, 4, TokenType::Style), ProtocolError);
  std::vector<LabeledUnit> gap = {{0, 1, TokenType::Style}, {2, 4, TokenType::Style}};
  CHECK_THROWS_AS(check_verdict({4, gap}, 4, TokenType::Style), ProtocolError);
  CHECK(keep_from_units(units, TokenType::Capability, 4) == 0);
  CHECK(keep_from_units(units, TokenType::Style, 4) == 2);
}

TEST_CASE("predict_boundary rejects empty text") {
  LexiconPredictor p;
  CHECK_THROWS_AS(predict_boundary(p, "", TokenType::Style), StructuralError);
}

TEST_CASE("truncate_span examples and prefix property") {
  CHECK(truncate_span("abcdef", {6, std::nullopt}).retained == "abcdef");
  CHECK(!truncate_span("abcdef", {6, std::nullopt}).truncated);
  const auto empty = truncate_span("abcdef", {0, std::nullopt});
  CHECK(empty.retained.empty());
  CHECK(empty.truncated);
  const std::string t = "Okay, let's compute";
  const auto cut = truncate_span(t, {offset_of(t, "compute"), std::nullopt});
  CHECK(cut.retained == "Okay, let's ");
  CHECK(cut.truncated);
  CHECK_THROWS_AS(truncate_span("abc", {4, std::nullopt}), StructuralError);
  const std::string u = "é∑ab";
  for (std::size_t k = 0; k <= 4; ++k) {
    const auto r = truncate_span(u, {k, std::nullopt});
    CHECK(u.compare(0, r.retained.size(), r.retained) == 0);
    CHECK(utf8::length(r.retained) == k);
    CHECK(r.truncated == (k < 4));
  }
}

TEST_CASE("trim_partial_word") {
  CHECK(trim_partial_word("compute the gc") == "compute the ");
  CHECK(trim_partial_word("compute the ") == "compute the ");
  CHECK(trim_partial_word("") == "");
  CHECK(trim_partial_word("gc") == "");
}

TEST_CASE("label wire format round trip") {
  CHECK(label_request_body("x", TokenType::Style) == json{{"text", "x"}, {"target", "style"}});
  BoundaryVerdict v{2, std::vector<LabeledUnit>{{0, 2, TokenType::Style}, {2, 3, TokenType::Capability}}};
  CHECK(parse_label_response(verdict_to_json(v).dump()) == v);
  CHECK(parse_label_response(R"({"keep_prefix_chars":3})") == BoundaryVerdict{3, std::nullopt});
  CHECK_THROWS_AS(parse_label_response(R"({"keep_prefix_chars":-1})"), ProtocolError);
  CHECK_THROWS_AS(parse_label_response(R"({"units":[]})"), ProtocolError);
  CHECK_THROWS_AS(parse_label_response(R"({"keep_prefix_chars":1,"units":[{"start":0}]})"), ProtocolError);
  CHECK(parse_token_type("capability") == TokenType::Capability);
  CHECK_THROWS(parse_token_type("banana"));
}

TEST_CASE("remote predictor matches the local lexicon over HTTP") {
  MockServer server(std::make_shared<MockBackend>(testutil::script_with({})));
  server.start();
  RemotePredictor remote(server.base_url());
  LexiconPredictor local;
  for (std::string t : {"Okay, let's compute", "compute gcd", "Wait, hmm.", "é so ∑"}) {
    for (auto target : {TokenType::Style, TokenType::Capability}) {
      const auto r = predict_boundary(remote, t, target);
      CHECK(r.keep_prefix_chars == local.predict(t, target).keep_prefix_chars);
    }
  }
  server.stop();
}
