// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/dataset_io.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "coopsynth/utf8.hpp"

namespace coopsynth {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

bool blank(std::string_view line) {
  for (char c : line)
    if (!utf8::is_space(c)) return false;
  return true;
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(lineno, std::string("malformed JSON: ") + e.what());
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(0, "cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<PromptEntry> read_prompts(std::istream& in) {
  std::vector<PromptEntry> out;
  std::map<std::string, std::size_t> first_line;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (blank(line)) continue;
    const json j = parse_line(line, lineno);
    if (!j.is_object()) throw DataError(lineno, "prompt line is not an object");
    PromptEntry p;
    if (!j.contains("id") || !j["id"].is_string()) throw DataError(lineno, "missing string field \"id\"");
    if (!j.contains("question") || !j["question"].is_string()) throw DataError(lineno, "missing string field \"question\"");
    p.id = j["id"].get<std::string>();
    p.question = j["question"].get<std::string>();
    if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
      try {
        p.tags = it->get<std::vector<std::string>>();
      } catch (const json::exception&) {
        throw DataError(lineno, "\"tags\" must be a list of strings");
      }
    }
    auto [pos, inserted] = first_line.emplace(p.id, lineno);
    if (!inserted)
      throw DataError(lineno, "duplicate id '" + p.id + "' (first seen on line " + std::to_string(pos->second) + ")");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PromptEntry> read_prompts(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_prompts(in);
}

void write_prompts(std::span<const PromptEntry> prompts, std::ostream& out) {
  for (const auto& p : prompts) {
    json j = {{"id", p.id}, {"question", p.question}};
    if (p.tags) j["tags"] = *p.tags;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

json record_to_json(const SynthesisRecord& r) {
  json spans = json::array();
  json offsets = json::array();
  const auto ranges = span_ranges(r);
  for (std::size_t i = 0; i < r.spans.size(); ++i) {
    const Span& s = r.spans[i];
    spans.push_back({{"index", s.index},
                     {"origin", std::string(to_string(s.origin))},
                     {"role", std::string(to_string(s.role))},
                     {"text", s.text},
                     {"truncated", s.truncated},
                     {"raw_length_chars", s.raw_length_chars}});
    offsets.push_back({ranges[i].first, ranges[i].second});
  }
  json meta = r.meta.is_object() ? r.meta : json::object();
  meta["span_offsets"] = std::move(offsets);
  return json{{"id", r.id},
              {"prompt", r.prompt},
              {"strategy", r.strategy},
              {"config_fingerprint", r.config_fingerprint},
              {"terminated_by", std::string(to_string(r.terminated_by))},
              {"spans", std::move(spans)},
              {"meta", std::move(meta)}};
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw StructuralError(where + " lacks \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw StructuralError(where + " field \"" + key + "\" has the wrong type");
  }
}

// Checks meta.span_offsets against the span texts.
std::optional<std::string> check_partition(const SynthesisRecord& r, const json& offsets) {
  if (!offsets.is_array()) return "partition: span_offsets is not an array";
  if (offsets.size() != r.spans.size()) return "partition: span_offsets has " + std::to_string(offsets.size()) +
                                                   " ranges for " + std::to_string(r.spans.size()) + " spans";
  std::size_t at = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const json& o = offsets[i];
    if (!o.is_array() || o.size() != 2 || !o[0].is_number_unsigned() || !o[1].is_number_unsigned())
      return "partition: range " + std::to_string(i) + " is malformed";
    const auto b = o[0].get<std::size_t>(), e = o[1].get<std::size_t>();
    if (b != at || e < b) return "partition: range " + std::to_string(i) + " overlaps or leaves a gap";
    if (e - b != utf8::length(r.spans[i].text))
      return "partition: range " + std::to_string(i) + " disagrees with the span text length";
    at = e;
  }
  return std::nullopt;
}

}  // namespace

SynthesisRecord record_from_json(const json& j) {
  if (!j.is_object()) throw StructuralError("record is not an object");
  SynthesisRecord r;
  r.id = field<std::string>(j, "id", "record");
  const std::string where = "record " + r.id;
  r.prompt = field<std::string>(j, "prompt", where);
  r.strategy = field<std::string>(j, "strategy", where);
  r.config_fingerprint = field<std::string>(j, "config_fingerprint", where);
  r.terminated_by = parse_termination(field<std::string>(j, "terminated_by", where));
  const json spans = field<json>(j, "spans", where);
  if (!spans.is_array()) throw StructuralError(where + " \"spans\" is not an array");
  for (const auto& s : spans) {
    if (!s.is_object()) throw StructuralError(where + " has a non-object span");
    Span sp;
    sp.index = field<std::size_t>(s, "index", where + " span");
    sp.origin = parse_origin(field<std::string>(s, "origin", where + " span"));
    sp.role = parse_role(field<std::string>(s, "role", where + " span"));
    sp.text = field<std::string>(s, "text", where + " span");
    sp.truncated = field<bool>(s, "truncated", where + " span");
    sp.raw_length_chars = field<std::size_t>(s, "raw_length_chars", where + " span");
    r.spans.push_back(std::move(sp));
  }
  r.meta = j.contains("meta") ? j["meta"] : json::object();
  if (!r.meta.is_object()) throw StructuralError(where + " \"meta\" is not an object");
  if (auto it = r.meta.find("span_offsets"); it != r.meta.end()) {
    if (auto bad = check_partition(r, *it)) throw StructuralError(where + ": " + *bad);
    r.meta.erase("span_offsets");
  }
  return r;
}

void write_record(const SynthesisRecord& record, std::ostream& out) { out << record_to_json(record).dump() << '\n'; }

void write_records(std::span<const SynthesisRecord> records, std::ostream& out) {
  for (const auto& r : records) write_record(r, out);
}

void write_records(std::span<const SynthesisRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(0, "cannot write " + path.string());
  write_records(records, out);
  if (!out) throw DataError(0, "write failed for " + path.string());
}

std::vector<SynthesisRecord> read_records(std::istream& in, std::string_view marker) {
  std::vector<SynthesisRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (blank(line)) continue;
    SynthesisRecord r;
    try {
      r = record_from_json(parse_line(line, lineno));
    } catch (const StructuralError& e) {
      throw DataError(lineno, e.what());
    }
    const auto violations = audit(r, marker);
    if (!violations.empty()) throw DataError(lineno, "record " + r.id + ": " + violations.front());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SynthesisRecord> read_records(const std::filesystem::path& path, std::string_view marker) {
  auto in = open_in(path);
  return read_records(in, marker);
}

std::vector<AuditEntry> audit_records(std::istream& in, std::string_view marker) {
  std::vector<AuditEntry> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (blank(line)) continue;
    AuditEntry entry;
    entry.line = lineno;
    try {
      const json j = parse_line(line, lineno);
      if (j.is_object() && j.contains("id") && j["id"].is_string()) entry.id = j["id"].get<std::string>();
      const SynthesisRecord r = record_from_json(j);
      entry.violations = audit(r, marker);
    } catch (const DataError& e) {
      entry.violations.push_back(std::string("json: ") + e.what());
    } catch (const StructuralError& e) {
      entry.violations.push_back(std::string("schema: ") + e.what());
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json export_sft(const SynthesisRecord& record, std::string_view marker) {
  std::string response = think_text(record);
  if (record.terminated_by != Termination::EndOfThinkMarker) response += marker;
  response += answer_text(record);
  return json{{"prompt", record.prompt}, {"response", response}};
}

SynthesisConfig load_config(const std::optional<std::filesystem::path>& path) {
  std::optional<std::filesystem::path> p = path;
  if (!p) {
    if (const char* env = std::getenv("TESSY_CONFIG"); env && *env) p = env;
  }
  if (!p) return default_config();
  const std::string text = read_file(*p);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + p->string() + " is not valid JSON: " + e.what());
  }
  SynthesisConfig c = config_from_json(j);
  validate(c);
  return c;
}

}  // namespace coopsynth
