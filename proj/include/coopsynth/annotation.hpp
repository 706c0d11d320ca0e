// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coopsynth/boundary.hpp"
#include "coopsynth/core.hpp"
#include "coopsynth/gateway.hpp"

namespace coopsynth {

// Segment of thinking text with the style spans an annotator found in it.
// Ranges are code-point offsets.
struct AnnotatedSegment {
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> style_spans;
  Origin source = Origin::Student;

  bool operator==(const AnnotatedSegment&) const = default;
};

inline constexpr std::size_t kDefaultAnnotationSamples = 100000;

// Full annotation prompt with segment_text in the <input_text> block.
// Throws StructuralError on empty input.
std::string render_annotation_prompt(std::string_view segment_text);

// First top-level JSON array in free text (code fences and prose around it
// are ignored). Throws FormatError when no balanced array exists.
std::string extract_json_array(std::string_view output);

// Parses the annotator's array and locates each string left to right,
// each search starting where the previous match ended.
AnnotatedSegment parse_annotation(std::string_view segment_text, std::string_view annotator_output,
                                  Origin source = Origin::Student);

std::vector<TokenType> labels_from_segment(const AnnotatedSegment& segment);

json to_json(const AnnotatedSegment& segment);
AnnotatedSegment annotated_segment_from_json(const json& j);

struct SegmentLength {
  std::size_t min_chars = 200;
  std::size_t max_chars = 2000;
};

// Non-overlapping windows over the think text of `source` across records,
// shuffled with `seed`. Window ends snap back to a sentence end when one
// lies in the allowed length range.
std::vector<std::string> sample_segments(std::span<const SynthesisRecord> records, Origin source, std::size_t count,
                                         SegmentLength length, std::uint64_t seed, std::string_view end_of_think_marker);

struct CorpusStats {
  std::size_t requested = 0;
  std::size_t sampled = 0;    // < requested means the source text ran short
  std::size_t written = 0;
  std::size_t malformed = 0;  // annotations rejected by parse_annotation

  std::size_t shortfall() const noexcept { return requested - sampled; }
};

struct CorpusOptions {
  std::size_t sample_count = kDefaultAnnotationSamples;
  SegmentLength length;
  Origin source = Origin::Student;
  std::uint64_t seed = 0;
  int parallelism = 1;
  int max_tokens = 1024;
  std::string end_of_think_marker = "</think>";
};

// Samples segments, asks `annotator` for style spans, and writes one JSON
// line per accepted segment in sampling order.
CorpusStats build_predictor_corpus(std::span<const SynthesisRecord> records, const CompletionClient& client,
                                   const EndpointProfile& annotator, const CorpusOptions& options, std::ostream& out);

}  // namespace coopsynth
