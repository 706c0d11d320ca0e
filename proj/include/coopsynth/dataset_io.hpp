// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopsynth/core.hpp"

namespace coopsynth {

struct PromptEntry {
  std::string id;
  std::string question;
  std::optional<std::vector<std::string>> tags;

  bool operator==(const PromptEntry&) const = default;
};

// JSON Lines; blank lines are skipped. Throws DataError with the 1-based
// line number for malformed lines and duplicate ids.
std::vector<PromptEntry> read_prompts(std::istream& in);
std::vector<PromptEntry> read_prompts(const std::filesystem::path& path);
void write_prompts(std::span<const PromptEntry> prompts, std::ostream& out);

// Record line schema:
//   {"id", "prompt", "strategy", "config_fingerprint", "terminated_by",
//    "spans": [{"index", "origin", "role", "text", "truncated", "raw_length_chars"}...],
//    "meta": {...}}
// The writer adds meta.span_offsets ([[start, end]...] in code points); the
// reader checks that they tile the output and drops them again.
json record_to_json(const SynthesisRecord& record);
SynthesisRecord record_from_json(const json& j);

void write_record(const SynthesisRecord& record, std::ostream& out);
void write_records(std::span<const SynthesisRecord> records, std::ostream& out);
void write_records(std::span<const SynthesisRecord> records, const std::filesystem::path& path);

// Throws DataError naming the line, the record id, and the violated invariant.
std::vector<SynthesisRecord> read_records(std::istream& in, std::string_view end_of_think_marker = "</think>");
std::vector<SynthesisRecord> read_records(const std::filesystem::path& path, std::string_view end_of_think_marker = "</think>");

struct AuditEntry {
  std::size_t line = 0;
  std::string id;
  std::vector<std::string> violations;
};

// Audits every line instead of stopping at the first bad one.
std::vector<AuditEntry> audit_records(std::istream& in, std::string_view end_of_think_marker = "</think>");

// {"prompt", "response"} with response = think text + answer text; the
// think text already ends with the end-of-think marker when the record
// terminated on it, otherwise the marker is appended.
json export_sft(const SynthesisRecord& record, std::string_view end_of_think_marker);

std::string read_file(const std::filesystem::path& path);

// Loads a config from the file, or from $TESSY_CONFIG when path is empty,
// or the defaults when neither is set.
SynthesisConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace coopsynth
