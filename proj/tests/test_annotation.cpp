// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "coopsynth/annotation.hpp"
#include "coopsynth/utf8.hpp"
#include "test_util.hpp"

using namespace coopsynth;

namespace {

SynthesisRecord think_record(const std::string& id, std::vector<std::pair<Origin, std::string>> think) {
  SynthesisRecord r;
  r.id = id;
  r.strategy = "tessy";
  r.terminated_by = Termination::EndpointStop;
  for (auto& [o, t] : think) {
    const std::size_t n = utf8::length(t);
    r.spans.push_back(Span{o, Role::Think, t, r.spans.size(), false, n});
  }
  r.spans.push_back(Span{Origin::Student, Role::Answer, "42", r.spans.size(), false, 2});
  return r;
}

}  // namespace

TEST_CASE("annotation prompt wraps the segment") {
  const auto p = render_annotation_prompt("Okay, so. gcd.");
  CHECK(p.find("<input_text>\nOkay, so. gcd.\n</input_text>") != std::string::npos);
  CHECK(p.find("Return a JSON array of strings") != std::string::npos);
  CHECK(p == render_annotation_prompt("Okay, so. gcd."));
  CHECK_THROWS_AS(render_annotation_prompt(""), StructuralError);
  // The segment is inserted once, verbatim, even if it looks like a placeholder.
  CHECK(render_annotation_prompt("{think_text}").find("<input_text>\n{think_text}\n</input_text>") != std::string::npos);
}

TEST_CASE("parse_annotation examples") {
  auto seg = parse_annotation("Okay, so. gcd.", R"(["Okay, so."])");
  CHECK(seg.style_spans == std::vector<std::pair<std::size_t, std::size_t>>{{0, 9}});
  CHECK(parse_annotation("anything", "[]").style_spans.empty());
  CHECK_THROWS_AS(parse_annotation("abc", R"(["xyz"])"), VerbatimViolation);
}

TEST_CASE("parse_annotation is strict about format and order") {
  CHECK_THROWS_AS(parse_annotation("abc", "no array here"), FormatError);
  CHECK_THROWS_AS(parse_annotation("abc", ""), FormatError);
  CHECK_THROWS_AS(parse_annotation("abc", "[1]"), FormatError);
  CHECK_THROWS_AS(parse_annotation("abc", R"([""])"), FormatError);
  // Out-of-order spans are a violation, not reordered.
  CHECK_THROWS_AS(parse_annotation("so then wait", R"(["wait", "so"])"), VerbatimViolation);
  // Repeats are located left to right.
  const auto seg = parse_annotation("so x so", R"(["so", "so"])");
  CHECK(seg.style_spans == std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {5, 7}});
  // Fenced or chatty output around the array is tolerated.
  CHECK(parse_annotation("é so", "Sure!\n```json\n[\"so\"]\n```").style_spans ==
        std::vector<std::pair<std::size_t, std::size_t>>{{2, 4}});
  CHECK(extract_json_array(R"(x ["a]", ["b"]] y)") == R"(["a]", ["b"]])");
}

TEST_CASE("labels_from_segment") {
  AnnotatedSegment s{"0123456789", {{0, 4}}, Origin::Student};
  std::string out;
  for (auto l : labels_from_segment(s)) out += l == TokenType::Style ? 'S' : 'C';
  CHECK(out == "SSSSCCCCCC");
  s.style_spans.clear();
  for (auto l : labels_from_segment(s)) CHECK(l == TokenType::Capability);
  s.style_spans = {{0, 2}, {2, 4}};
  out.clear();
  for (auto l : labels_from_segment(s)) out += l == TokenType::Style ? 'S' : 'C';
  CHECK(out == "SSSSCCCCCC");
}

TEST_CASE("segment json round trip") {
  AnnotatedSegment s{"é so", {{2, 4}}, Origin::Teacher};
  CHECK(annotated_segment_from_json(to_json(s)) == s);
}

TEST_CASE("sample_segments windows and shortfall") {
  std::string a;
  for (int i = 0; i < 60; ++i) a += "Sentence " + std::to_string(i) + " here. ";
  std::vector<SynthesisRecord> recs = {
      think_record("a", {{Origin::Student, a}, {Origin::Teacher, "teacher text"}, {Origin::Student, "tail"}})};
  const auto w1 = sample_segments(recs, Origin::Student, 1000, {20, 60}, 5, "</think>");
  const auto w2 = sample_segments(recs, Origin::Student, 1000, {20, 60}, 5, "</think>");
  CHECK(w1 == w2);
  std::size_t total = 0;
  for (const auto& w : w1) {
    CHECK(utf8::length(w) >= 20);
    CHECK(utf8::length(w) <= 60);
    CHECK(a.find(w) != std::string::npos);
    total += w.size();
  }
  CHECK(total <= a.size());
  CHECK(!w1.empty());
  const auto few = sample_segments(recs, Origin::Student, 2, {20, 60}, 5, "</think>");
  CHECK(few.size() == 2);
  CHECK_THROWS_AS(sample_segments(recs, Origin::Student, 0, {20, 60}, 5, "</think>"), StructuralError);
  // The marker never reaches the annotator.
  std::vector<SynthesisRecord> m = {think_record("m", {{Origin::Student, std::string(30, 'x') + "</think>"}})};
  for (const auto& w : sample_segments(m, Origin::Student, 10, {10, 40}, 1, "</think>")) CHECK(w.find("</think>") == std::string::npos);
}

TEST_CASE("predictor corpus is reproducible and counts shortfall") {
  std::string text;
  for (int i = 0; i < 40; ++i) text += "Okay, so we compute gcd " + std::to_string(i) + ". Wait, hmm. ";
  std::vector<SynthesisRecord> recs = {think_record("r", {{Origin::Student, text}})};
  auto backend = std::make_shared<MockBackend>(testutil::script_with({}));
  MockCompletionClient client(backend);
  EndpointProfile annotator;
  annotator.model_name = "teacher";
  CorpusOptions opts;
  opts.sample_count = 100000;
  opts.length = {50, 200};
  opts.seed = 3;
  std::ostringstream a, b;
  const auto s1 = build_predictor_corpus(recs, client, annotator, opts, a);
  opts.parallelism = 4;
  const auto s2 = build_predictor_corpus(recs, client, annotator, opts, b);
  CHECK(a.str() == b.str());
  CHECK(s1.requested == 100000);
  CHECK(s1.shortfall() > 0);
  CHECK(s1.written == s1.sampled);
  CHECK(s1.malformed == 0);
  std::istringstream in(a.str());
  std::string line;
  while (std::getline(in, line)) {
    const auto seg = annotated_segment_from_json(json::parse(line));
    CHECK(!seg.style_spans.empty());
  }
  opts.sample_count = 0;
  std::ostringstream c;
  CHECK_THROWS_AS(build_predictor_corpus(recs, client, annotator, opts, c), StructuralError);
  CHECK(CorpusOptions{}.sample_count == 100000);
}
