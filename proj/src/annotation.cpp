// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/annotation.hpp"

#include <atomic>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

#include "coopsynth/utf8.hpp"

namespace coopsynth {
namespace {

constexpr std::string_view kAnnotationPrompt =
    "You are a text analysis expert.\n"
    "\n"
    "Task: Extract all spans of text that are transitional, filler, or tone-setting phrases.\n"
    "\n"
    "What to extract:\n"
    "\n"
    "- Include phrases or sentences that:\n"
    "  - Express hesitation, tone, or attitude (e.g., \"well\", \"okay\", \"so\", \"let's see\", \"I think\")\n"
    "  - Indicate transition or setup (e.g., \"to begin with\", \"in this case\", \"for example\", \"but if\")\n"
    "  - Serve as narration or connection, not analysis\n"
    "- Do not include:\n"
    "  - Actual reasoning, deduction, or explanation\n"
    "  - Code or formula descriptions\n"
    "  - Problem-solving steps\n"
    "\n"
    "Output format (STRICT JSON):\n"
    "\n"
    "- Return a JSON array of strings, e.g.: [\"<span 1>\", \"<span 2>\", ...]\n"
    "- Rules:\n"
    "  1. Each span must be copied verbatim from the original text.\n"
    "  2. Preserve order of appearance.\n"
    "  3. If there are none, return an empty list: []\n"
    "  4. Output only the JSON array \xE2\x80\x94 no explanation or extra text.\n"
    "\n"
    "<input_text>\n"
    "{think_text}\n"
    "</input_text>";

}  // namespace

std::string render_annotation_prompt(std::string_view segment_text) {
  if (segment_text.empty()) throw StructuralError("annotation segment is empty");
  return fill_template(kAnnotationPrompt, {{"{think_text}", segment_text}});
}

std::string extract_json_array(std::string_view output) {
  for (std::size_t start = output.find('['); start != std::string_view::npos; start = output.find('[', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < output.size(); ++i) {
      const char c = output[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']') {
        if (--depth == 0) return std::string(output.substr(start, i - start + 1));
      }
    }
  }
  throw FormatError("annotator output contains no JSON array");
}

AnnotatedSegment parse_annotation(std::string_view segment_text, std::string_view annotator_output, Origin source) {
  json arr;
  try {
    arr = json::parse(extract_json_array(annotator_output));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("annotator array is not valid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw FormatError("annotator output is not a JSON array");

  AnnotatedSegment seg;
  seg.text = std::string(segment_text);
  seg.source = source;
  std::size_t from = 0;  // bytes
  for (const auto& item : arr) {
    if (!item.is_string()) throw FormatError("annotator array holds a non-string element");
    const std::string s = item.get<std::string>();
    if (s.empty()) throw FormatError("annotator array holds an empty span");
    const auto at = segment_text.find(s, from);
    if (at == std::string_view::npos)
      throw VerbatimViolation("span \"" + s + "\" not found verbatim at or after offset " +
                              std::to_string(utf8::char_offset(segment_text, from)));
    const std::size_t start = utf8::char_offset(segment_text, at);
    seg.style_spans.emplace_back(start, start + utf8::length(s));
    from = at + s.size();
  }
  return seg;
}

std::vector<TokenType> labels_from_segment(const AnnotatedSegment& segment) {
  std::vector<TokenType> labels(utf8::length(segment.text), TokenType::Capability);
  for (const auto& [b, e] : segment.style_spans)
    for (std::size_t i = b; i < e && i < labels.size(); ++i) labels[i] = TokenType::Style;
  return labels;
}

json to_json(const AnnotatedSegment& segment) {
  json spans = json::array();
  for (const auto& [b, e] : segment.style_spans) spans.push_back({b, e});
  return json{{"text", segment.text}, {"style_spans", spans}, {"source", std::string(to_string(segment.source))}};
}

AnnotatedSegment annotated_segment_from_json(const json& j) {
  AnnotatedSegment seg;
  try {
    seg.text = j.at("text").get<std::string>();
    for (const auto& r : j.at("style_spans")) seg.style_spans.emplace_back(r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>());
    seg.source = parse_origin(j.at("source").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed annotated segment: ") + e.what());
  }
  const std::size_t n = utf8::length(seg.text);
  std::size_t prev_end = 0;
  for (const auto& [b, e] : seg.style_spans) {
    if (b < prev_end || e <= b || e > n) throw FormatError("annotated segment spans are out of order or out of bounds");
    prev_end = e;
  }
  return seg;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> source_runs(std::span<const SynthesisRecord> records, Origin source, std::string_view marker) {
  std::vector<std::string> runs;
  for (const auto& r : records) {
    std::string run;
    for (const auto& s : r.spans) {
      if (s.role == Role::Think && s.origin == source) {
        run += s.text;
        continue;
      }
      if (!run.empty()) runs.push_back(std::move(run));
      run.clear();
    }
    if (!run.empty()) runs.push_back(std::move(run));
  }
  if (!marker.empty()) {
    for (auto& run : runs)
      for (auto pos = run.find(marker); pos != std::string::npos; pos = run.find(marker, pos)) run.erase(pos, marker.size());
  }
  return runs;
}

bool is_sentence_end(std::string_view text, std::size_t byte) {
  const char c = text[byte];
  if (c == '\n') return true;
  if (c != '.' && c != '?' && c != '!') return false;
  return byte + 1 == text.size() || utf8::is_space(text[byte + 1]);
}

}  // namespace

std::vector<std::string> sample_segments(std::span<const SynthesisRecord> records, Origin source, std::size_t count,
                                         SegmentLength length, std::uint64_t seed, std::string_view end_of_think_marker) {
  if (count == 0) throw StructuralError("sample count must be positive");
  if (length.min_chars == 0 || length.max_chars < length.min_chars) throw StructuralError("invalid segment length range");
  std::mt19937_64 rng(seed);
  std::vector<std::string> windows;

  for (const auto& run : source_runs(records, source, end_of_think_marker)) {
    std::vector<std::size_t> cp;  // byte offset of each code point, plus the end
    for (std::size_t i = 0; i < run.size(); ++i)
      if ((static_cast<unsigned char>(run[i]) & 0xC0) != 0x80) cp.push_back(i);
    const std::size_t total = cp.size();
    cp.push_back(run.size());

    std::size_t pos = 0;
    while (total - pos >= length.min_chars) {
      const std::size_t hi = std::min(length.max_chars, total - pos);
      std::size_t len = length.min_chars + static_cast<std::size_t>(rng() % (hi - length.min_chars + 1));
      for (std::size_t end = pos + len; end > pos + length.min_chars; --end) {
        if (is_sentence_end(run, cp[end - 1])) {
          len = end - pos;
          break;
        }
      }
      windows.push_back(run.substr(cp[pos], cp[pos + len] - cp[pos]));
      pos += len;
    }
  }

  for (std::size_t i = windows.size(); i > 1; --i) std::swap(windows[i - 1], windows[rng() % i]);
  if (windows.size() > count) windows.resize(count);
  return windows;
}

CorpusStats build_predictor_corpus(std::span<const SynthesisRecord> records, const CompletionClient& client,
                                   const EndpointProfile& annotator, const CorpusOptions& options, std::ostream& out) {
  if (options.sample_count == 0) throw StructuralError("sample count must be positive");
  const auto segments =
      sample_segments(records, options.source, options.sample_count, options.length, options.seed, options.end_of_think_marker);

  std::vector<std::optional<AnnotatedSegment>> results(segments.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < segments.size(); i = next++) {
      try {
        const std::string prompt = render_prompt(annotator, render_annotation_prompt(segments[i]), "");
        const CompletionResult r = client.complete(annotator, make_request(annotator, prompt, options.max_tokens));
        results[i] = parse_annotation(segments[i], r.text, options.source);
      } catch (const Error&) {
        results[i].reset();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max(1, options.parallelism), segments.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  CorpusStats stats;
  stats.requested = options.sample_count;
  stats.sampled = segments.size();
  for (const auto& r : results) {
    if (!r) {
      ++stats.malformed;
      continue;
    }
    out << to_json(*r).dump() << '\n';
    ++stats.written;
  }
  return stats;
}

}  // namespace coopsynth
