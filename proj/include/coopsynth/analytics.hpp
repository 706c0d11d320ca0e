// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coopsynth/core.hpp"

namespace coopsynth {

namespace analytics {

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

// Lowercase ASCII; split on ASCII whitespace and punctuation. Bytes >= 0x80
// are word characters.
std::vector<std::string> default_tokenize(std::string_view text);

// Runs `command` with the text on stdin; tokens are its whitespace-separated
// stdout.
Tokenizer external_tokenizer(std::string command);

struct Document {
  std::string doc_id;
  std::string text;
};

struct CorpusVector {
  std::string doc_id;
  std::map<std::size_t, double> entries;  // term index -> weight >= 0
};

struct TfidfResult {
  std::vector<std::string> vocabulary;  // sorted; index = term index
  std::vector<CorpusVector> vectors;    // input order
};

enum class IdfMode {
  Plain,     // ln(N / df)
  Smoothed,  // ln((1 + N) / (1 + df)) + 1
};

TfidfResult tfidf_vectors(std::span<const Document> documents, const Tokenizer& tokenizer = default_tokenize,
                          IdfMode idf = IdfMode::Plain);

// 0 when either vector is zero.
double cosine(const CorpusVector& a, const CorpusVector& b);

// Pairs vectors by doc_id (the query id) and averages cosine similarity.
// Throws PairingError on unmatched or duplicated ids.
double mean_pairwise_similarity(std::span<const CorpusVector> group_a, std::span<const CorpusVector> group_b);

struct ProjectionPoint {
  std::string doc_id;
  double x = 0.0;
  double y = 0.0;
};

struct ProjectionReport {
  std::vector<ProjectionPoint> points;
  std::array<std::vector<double>, 2> component_axes;
  std::array<double, 2> explained_variance{};
  double total_variance = 0.0;
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues come
// back in descending order; eigenvectors are the columns of `vectors`
// (row-major, n x n).
struct EigenResult {
  std::vector<double> values;
  std::vector<double> vectors;
  int sweeps = 0;
};
EigenResult jacobi_eigen(std::vector<double> matrix, std::size_t n, double tolerance = 1e-12, int max_sweeps = 100);

// Top-2 principal components of the mean-centred vectors (covariance
// divisor N-1). Each axis is oriented so its largest-magnitude coordinate is
// positive. When the vocabulary is wider than the document count the
// eigenproblem is solved on the Gram matrix instead.
ProjectionReport pca_project(std::span<const CorpusVector> vectors, std::size_t vocabulary_size);

struct OriginRatio {
  double teacher_fraction = 0.0;
  double student_fraction = 0.0;
};

enum class LengthUnit { Chars, Words };

OriginRatio origin_ratio(std::span<const SynthesisRecord> records, LengthUnit unit = LengthUnit::Chars,
                         const Tokenizer& tokenizer = default_tokenize);

struct LengthSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct LengthStats {
  std::map<std::string, LengthSummary> per_strategy;
  // (a, b) -> mean(a) - mean(b), for every ordered pair a != b
  std::map<std::pair<std::string, std::string>, double> mean_differences;
};

// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

LengthStats length_stats(const std::map<std::string, std::vector<double>>& lengths);

// Length of each record's full output.
std::vector<double> record_lengths(std::span<const SynthesisRecord> records, LengthUnit unit,
                                   const Tokenizer& tokenizer = default_tokenize);

struct FrequencyTable {
  std::vector<std::string> labels;
  std::vector<std::string> words;
  std::vector<std::vector<double>> frequency;  // [word][corpus], relative
};

struct LabeledCorpus {
  std::string label;
  std::vector<std::string> documents;
};

// Top-k words by their maximum relative frequency over corpora; ties by word.
FrequencyTable word_frequency_table(std::span<const LabeledCorpus> corpora, std::size_t top_k = 30,
                                    const Tokenizer& tokenizer = default_tokenize);

std::string to_csv(const FrequencyTable& table);
std::string to_csv(const LengthStats& stats);

// Scatter plot; colour by the label assigned to each point's doc_id.
std::string projection_svg(const ProjectionReport& report, const std::map<std::string, std::string>& labels);

}  // namespace analytics
}  // namespace coopsynth
