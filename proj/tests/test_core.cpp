// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <openssl/evp.h>

#include <cstdio>

#include "coopsynth/core.hpp"
#include "coopsynth/errors.hpp"
#include "coopsynth/utf8.hpp"
#include "test_util.hpp"

using namespace coopsynth;

namespace {

std::string sha256_prefix_hex(const std::string& s) {
  unsigned char d[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_Digest(s.data(), s.size(), d, &n, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (int i = 0; i < 16; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", d[i]);
    hex += buf;
  }
  return hex;
}

Span span(Origin o, Role r, std::string text, std::size_t index, bool truncated = false, std::size_t extra = 0) {
  const std::size_t len = utf8::length(text);
  return Span{o, r, std::move(text), index, truncated, len + extra};
}

}  // namespace

TEST_CASE("utf8 helpers count code points") {
  CHECK(utf8::length("abc") == 3);
  CHECK(utf8::length("é∑x") == 3);
  CHECK(utf8::byte_offset("é∑x", 2) == 5);
  CHECK(utf8::char_offset("é∑x", 5) == 2);
  CHECK(utf8::prefix("é∑x", 1) == "é");
}

TEST_CASE("enum names round-trip") {
  for (auto o : {Origin::Student, Origin::Teacher}) CHECK(parse_origin(to_string(o)) == o);
  for (auto r : {Role::Think, Role::Answer}) CHECK(parse_role(to_string(r)) == r);
  for (auto t : {Termination::EndOfThinkMarker, Termination::BudgetExhausted, Termination::EndpointStop})
    CHECK(parse_termination(to_string(t)) == t);
  CHECK(to_string(Termination::EndOfThinkMarker) == "end_of_think_marker");
  CHECK_THROWS_AS(parse_origin("model"), StructuralError);
  CHECK(other(Origin::Student) == Origin::Teacher);
}

TEST_CASE("default config values") {
  const auto c = default_config();
  CHECK(c.k_max_tokens == 20);
  CHECK(c.think_budget_chars == 160000);
  CHECK(c.end_of_think_marker == "</think>");
  CHECK(c.vocab_mismatch_trim);
  CHECK(c.zero_progress_limit == 2);
  CHECK(c.reject_candidates == 5);
  CHECK(c.mix_ratio == 0.5);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("validate rejects bad configs") {
  auto c = default_config();
  c.k_max_tokens = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config();
  c.student.prompt_template = "no placeholder";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config();
  c.teacher.prompt_template = "{body}{body}";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config();
  c.end_of_think_marker = "";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config();
  c.zero_progress_limit = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("config json round trip and strictness") {
  auto c = default_config();
  c.k_max_tokens = 7;
  c.student.base_url = "http://localhost:1";
  c.teacher_predictor.kind = PredictorSelector::Kind::Remote;
  c.teacher_predictor.url = "http://localhost:2";
  CHECK(config_from_json(to_json(c)) == c);
  CHECK(config_from_json(json::object()) == default_config());
  CHECK_THROWS_AS(config_from_json(json{{"k_max_token", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"student", {{"sampling", {{"temp", 1}}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"k_max_tokens", "twenty"}}), ConfigError);
}

TEST_CASE("fingerprint is deterministic, sensitive and canonical") {
  const auto c = default_config();
  CHECK(fingerprint(c) == fingerprint(c));
  CHECK(fingerprint(c).size() == 32);
  auto c21 = c;
  c21.k_max_tokens = 21;
  CHECK(fingerprint(c) != fingerprint(c21));

  // Same config spelled with reversed key order; the oracle canonicalizes by
  // re-serializing with sorted keys and hashing.
  const json j = to_json(c);
  std::string reversed = "{";
  bool first = true;
  for (auto it = j.rbegin(); it != j.rend(); ++it) {
    if (!first) reversed += ",";
    first = false;
    reversed += json(it.key()).dump() + ":" + it.value().dump();
  }
  reversed += "}";
  REQUIRE(reversed != j.dump());
  const json parsed = json::parse(reversed);
  CHECK(fingerprint(config_from_json(parsed)) == fingerprint(c));
  CHECK(sha256_prefix_hex(parsed.dump()) == fingerprint(c));
}

TEST_CASE("reconstruct concatenates spans") {
  SynthesisRecord r;
  r.id = "r";
  r.spans = {span(Origin::Student, Role::Think, "Okay, ", 0), span(Origin::Teacher, Role::Think, "use gcd.", 1)};
  CHECK(reconstruct(r) == "Okay, use gcd.");
  CHECK(span_ranges(r) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 6}, {6, 14}});
  r.spans.clear();
  CHECK(reconstruct(r).empty());
  r.spans = {span(Origin::Student, Role::Think, "a", 1)};
  CHECK_THROWS_AS(reconstruct(r), StructuralError);
}

TEST_CASE("span ranges tile the output") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto r = testutil::random_record(rng, "id" + std::to_string(i));
    const auto ranges = span_ranges(r);
    std::size_t at = 0;
    for (const auto& [b, e] : ranges) {
      CHECK(b == at);
      at = e;
    }
    CHECK(at == utf8::length(reconstruct(r)));
  }
}

TEST_CASE("audit flags each invariant") {
  SynthesisRecord r;
  r.id = "x";
  r.strategy = "tessy";
  r.terminated_by = Termination::EndOfThinkMarker;
  r.spans = {span(Origin::Student, Role::Think, "Okay, ", 0, true, 5), span(Origin::Teacher, Role::Think, "gcd</think>", 1),
             span(Origin::Student, Role::Answer, "42", 2)};
  CHECK(audit(r).empty());

  auto bad = r;
  bad.spans[0].truncated = false;
  auto v = audit(bad);
  REQUIRE(!v.empty());
  CHECK(v[0].rfind("truncation_flag", 0) == 0);

  bad = r;
  bad.spans[2].origin = Origin::Teacher;
  CHECK(audit(bad).at(0).rfind("answer_origin", 0) == 0);

  bad = r;
  bad.spans[0].origin = Origin::Teacher;
  bad.spans[1].origin = Origin::Teacher;
  bool first_span = false;
  for (const auto& m : audit(bad)) first_span |= m.rfind("first_span", 0) == 0;
  CHECK(first_span);

  bad = r;
  bad.terminated_by = Termination::EndpointStop;
  CHECK(audit(bad).at(0).rfind("marker_hygiene", 0) == 0);

  bad = r;
  std::swap(bad.spans[1], bad.spans[2]);
  bad.spans[1].index = 1;
  bad.spans[2].index = 2;
  bool mono = false;
  for (const auto& m : audit(bad)) mono |= m.rfind("role_monotonicity", 0) == 0;
  CHECK(mono);

  bad = r;
  bad.spans[1].origin = Origin::Student;
  bool sw = false;
  for (const auto& m : audit(bad)) sw |= m.rfind("switch_iff_truncated", 0) == 0;
  CHECK(sw);
}
