// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include "coopsynth/analytics.hpp"
#include "coopsynth/annotation.hpp"
#include "coopsynth/dataset_io.hpp"
#include "coopsynth/mock_server.hpp"
#include "coopsynth/orchestrator.hpp"

namespace coopsynth {
namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const auto comma = s.find(',', at);
    const auto part = s.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    if (!part.empty()) out.push_back(part);
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(0, "cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------

struct SynthesizeArgs {
  std::string strategy;
  std::optional<std::string> config;
  std::string prompts;
  std::string out;
  int parallelism = 1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> limit;
  std::optional<double> mix_ratio;
  std::optional<int> candidates;
  std::optional<int> k;
};

int cmd_synthesize(const SynthesizeArgs& a, std::ostream& out, std::ostream& err) {
  SynthesisConfig config;
  StrategySelector selector;
  try {
    config = load_config(a.config ? std::optional<std::filesystem::path>(*a.config) : std::nullopt);
    if (a.mix_ratio) config.mix_ratio = *a.mix_ratio;
    if (a.candidates) config.reject_candidates = *a.candidates;
    if (a.k) config.k_max_tokens = *a.k;
    validate(config);
    selector = parse_strategy(a.strategy, config);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.parallelism < 1) throw UsageError("--parallelism must be >= 1");
  using K = StrategySelector::Kind;
  if (selector.kind != K::TeacherOnly && config.student.base_url.empty())
    throw UsageError("config does not set student.base_url");
  if (selector.kind != K::StudentOnly && config.teacher.base_url.empty())
    throw UsageError("config does not set teacher.base_url");

  auto prompts = read_prompts(std::filesystem::path(a.prompts));
  if (a.limit && prompts.size() > *a.limit) prompts.resize(*a.limit);
  std::vector<BatchItem> items;
  items.reserve(prompts.size());
  for (auto& p : prompts) items.push_back({p.id, p.question});

  auto limiter = std::make_shared<InFlightLimiter>(config.max_in_flight);
  auto client = std::make_shared<HttpCompletionClient>(limiter);
  const Engine engine = Engine::from_config(config, client, limiter);
  const auto outcomes = run_batch(engine, items, selector, a.parallelism, a.seed);

  auto file = open_out(a.out);
  std::size_t failed = 0;
  std::ofstream errors;
  for (const auto& o : outcomes) {
    if (o.ok()) {
      SynthesisRecord r = *o.record;
      r.meta["seed"] = a.seed;
      write_record(r, file);
      continue;
    }
    ++failed;
    if (!errors.is_open()) errors = open_out(a.out + ".errors.jsonl");
    errors << json{{"id", o.id}, {"error", o.error}}.dump() << '\n';
    err << "error: " << o.id << ": " << o.error << '\n';
  }
  out << "synthesized " << outcomes.size() - failed << " of " << outcomes.size() << " prompts with strategy "
      << selector.name() << '\n';
  return failed == 0 ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------

struct AnnotateArgs {
  std::optional<std::string> config;
  std::string records;
  std::string out;
  std::size_t samples = kDefaultAnnotationSamples;
  std::string source = "student";
  std::uint64_t seed = 0;
  std::size_t min_chars = 200;
  std::size_t max_chars = 2000;
  int parallelism = 1;
};

int cmd_annotate(const AnnotateArgs& a, std::ostream& out, std::ostream& err) {
  SynthesisConfig config;
  CorpusOptions opts;
  try {
    config = load_config(a.config ? std::optional<std::filesystem::path>(*a.config) : std::nullopt);
    opts.source = parse_origin(a.source);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const StructuralError& e) {
    throw UsageError(e.what());
  }
  if (a.samples == 0) throw UsageError("--samples must be positive");
  if (a.min_chars == 0 || a.max_chars < a.min_chars) throw UsageError("invalid segment length range");
  opts.sample_count = a.samples;
  opts.seed = a.seed;
  opts.length = {a.min_chars, a.max_chars};
  opts.parallelism = std::max(1, a.parallelism);
  opts.max_tokens = config.annotation_max_tokens;
  opts.end_of_think_marker = config.end_of_think_marker;

  const auto records = read_records(std::filesystem::path(a.records), config.end_of_think_marker);
  auto limiter = std::make_shared<InFlightLimiter>(config.max_in_flight);
  HttpCompletionClient client(limiter);
  auto file = open_out(a.out);
  const CorpusStats stats = build_predictor_corpus(records, client, config.teacher, opts, file);
  out << "annotated " << stats.written << " segments (" << stats.malformed << " rejected)\n";
  if (stats.shortfall() > 0)
    err << "warning: requested " << stats.requested << " segments but the source text only yields " << stats.sampled << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string records;
  std::string report;
  std::string tokenizer = "default";
  std::size_t top_k = 30;
  std::uint64_t seed = 0;
  std::size_t max_pca_points = 400;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream&) {
  namespace an = analytics;
  an::Tokenizer tokenizer = an::default_tokenize;
  if (a.tokenizer.rfind("external:", 0) == 0) {
    tokenizer = an::external_tokenizer(a.tokenizer.substr(9));
  } else if (a.tokenizer != "default") {
    throw UsageError("--tokenizer must be 'default' or 'external:<cmd>'");
  }
  const auto files = split_commas(a.records);
  if (files.empty()) throw UsageError("--records needs at least one file");

  struct Corpus {
    std::string label;
    std::vector<SynthesisRecord> records;
  };
  std::vector<Corpus> corpora;
  std::set<std::string> used;
  for (const auto& f : files) {
    Corpus c;
    c.records = read_records(std::filesystem::path(f));
    c.label = c.records.empty() ? std::filesystem::path(f).stem().string() : c.records.front().strategy;
    if (!used.insert(c.label).second) {
      c.label += ":" + std::filesystem::path(f).stem().string();
      used.insert(c.label);
    }
    corpora.push_back(std::move(c));
  }
  std::filesystem::create_directories(a.report);
  const std::filesystem::path dir(a.report);

  // Provenance ratios.
  json ratios = json::object();
  for (const auto& c : corpora) {
    if (c.records.empty()) continue;
    const auto chars = an::origin_ratio(c.records, an::LengthUnit::Chars);
    const auto words = an::origin_ratio(c.records, an::LengthUnit::Words, tokenizer);
    ratios[c.label] = {{"chars", {{"teacher_fraction", chars.teacher_fraction}, {"student_fraction", chars.student_fraction}}},
                       {"words", {{"teacher_fraction", words.teacher_fraction}, {"student_fraction", words.student_fraction}}}};
  }
  open_out(dir / "origin_ratio.json") << ratios.dump(2) << '\n';

  // Lengths.
  std::map<std::string, std::vector<double>> lengths;
  for (const auto& c : corpora)
    if (!c.records.empty()) lengths[c.label] = an::record_lengths(c.records, an::LengthUnit::Words, tokenizer);
  if (!lengths.empty()) open_out(dir / "length_stats.csv") << an::to_csv(an::length_stats(lengths));

  // Word frequencies.
  std::vector<an::LabeledCorpus> labeled;
  for (const auto& c : corpora) {
    an::LabeledCorpus lc{c.label, {}};
    for (const auto& r : c.records) lc.documents.push_back(reconstruct(r));
    labeled.push_back(std::move(lc));
  }
  open_out(dir / "word_frequency.csv") << an::to_csv(an::word_frequency_table(labeled, a.top_k, tokenizer));

  // TF-IDF over the union of all corpora, then same-query similarity.
  std::vector<an::Document> docs;
  std::vector<std::pair<std::size_t, std::string>> owner;  // corpus index, record id
  for (std::size_t ci = 0; ci < corpora.size(); ++ci)
    for (const auto& r : corpora[ci].records) {
      docs.push_back({corpora[ci].label + "\x1f" + r.id, reconstruct(r)});
      owner.emplace_back(ci, r.id);
    }
  json similarity = json::array();
  if (!docs.empty()) {
    const auto tfidf = an::tfidf_vectors(docs, tokenizer);
    std::vector<std::map<std::string, const an::CorpusVector*>> by_corpus(corpora.size());
    for (std::size_t i = 0; i < tfidf.vectors.size(); ++i) by_corpus[owner[i].first][owner[i].second] = &tfidf.vectors[i];
    for (std::size_t x = 0; x < corpora.size(); ++x)
      for (std::size_t y = x + 1; y < corpora.size(); ++y) {
        std::vector<an::CorpusVector> ga, gb;
        for (const auto& [id, v] : by_corpus[x]) {
          auto it = by_corpus[y].find(id);
          if (it == by_corpus[y].end()) continue;
          ga.push_back({id, v->entries});
          gb.push_back({id, it->second->entries});
        }
        json entry = {{"a", corpora[x].label}, {"b", corpora[y].label}, {"pairs", ga.size()}};
        entry["mean_similarity"] = ga.empty() ? json(nullptr) : json(an::mean_pairwise_similarity(ga, gb));
        similarity.push_back(std::move(entry));
      }
  }
  open_out(dir / "similarity.json") << similarity.dump(2) << '\n';

  // PCA on a seeded sample.
  json pca = nullptr;
  if (docs.size() >= 2) {
    std::vector<std::size_t> pick(docs.size());
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    if (pick.size() > a.max_pca_points) {
      std::mt19937_64 rng(a.seed);
      for (std::size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng() % i]);
      pick.resize(a.max_pca_points);
      std::sort(pick.begin(), pick.end());
    }
    std::vector<an::Document> sample;
    std::map<std::string, std::string> labels;
    for (auto i : pick) {
      sample.push_back(docs[i]);
      labels[docs[i].doc_id] = corpora[owner[i].first].label;
    }
    const auto tfidf = an::tfidf_vectors(sample, tokenizer);
    if (tfidf.vocabulary.size() >= 2) {
      const auto rep = an::pca_project(tfidf.vectors, tfidf.vocabulary.size());
      json points = json::array();
      for (const auto& p : rep.points) {
        const auto sep = p.doc_id.find('\x1f');
        points.push_back({{"corpus", p.doc_id.substr(0, sep)}, {"id", p.doc_id.substr(sep + 1)}, {"x", p.x}, {"y", p.y}});
      }
      pca = {{"seed", a.seed},
             {"points", points},
             {"explained_variance", rep.explained_variance},
             {"total_variance", rep.total_variance}};
      open_out(dir / "pca.svg") << an::projection_svg(rep, labels);
    }
  }
  open_out(dir / "pca.json") << pca.dump(2) << '\n';

  json summary = {{"corpora", json::array()},
                  {"tokenizer", a.tokenizer},
                  {"seed", a.seed},
                  {"note", "word counts use the analytics tokenizer, not a model tokenizer; compare shapes, not absolute values"}};
  for (const auto& c : corpora) summary["corpora"].push_back({{"label", c.label}, {"records", c.records.size()}});
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
  out << "wrote report for " << corpora.size() << " corpora to " << a.report << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, const std::string& marker, std::ostream& out, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(0, "cannot open " + path);
  const auto entries = audit_records(in, marker);
  std::size_t bad = 0;
  for (const auto& e : entries) {
    if (e.violations.empty()) continue;
    ++bad;
    for (const auto& v : e.violations) err << "line " << e.line << " (" << e.id << "): " << v << '\n';
  }
  out << entries.size() - bad << " of " << entries.size() << " records valid\n";
  return bad == 0 ? kExitOk : kExitRuntime;
}

int cmd_export(const std::string& records, const std::string& path, const std::string& marker, std::ostream& out) {
  const auto rs = read_records(std::filesystem::path(records), marker);
  auto file = open_out(path);
  for (const auto& r : rs) file << export_sft(r, marker).dump() << '\n';
  out << "exported " << rs.size() << " records\n";
  return kExitOk;
}

int cmd_mock_serve(const std::string& script_path, const std::string& host, int port, std::ostream& out) {
  json j;
  try {
    j = json::parse(read_file(script_path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("mock script is not JSON: ") + e.what());
  }
  MockServer server(std::make_shared<MockBackend>(mock_script_from_json(j)));
  out << "serving mock endpoints on http://" << host << ":" << port << std::endl;
  server.serve_blocking(host, port);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Teacher/student cooperative data synthesis", "coopsynth"};
  app.require_subcommand(1);

  SynthesizeArgs syn;
  auto* s = app.add_subcommand("synthesize", "Synthesize records for a prompt file");
  s->add_option("--strategy", syn.strategy, "tessy, teacher-only, student-only, teacher-mix, reject-sampling, "
                                            "self-distillation, teacher-answer, teacher-think")->required();
  s->add_option("--config", syn.config, "JSON config (defaults to $TESSY_CONFIG)");
  s->add_option("--prompts", syn.prompts, "prompt JSON Lines file")->required();
  s->add_option("--out", syn.out, "output records file")->required();
  s->add_option("--parallelism", syn.parallelism, "concurrent trajectories");
  s->add_option("--seed", syn.seed, "seed for per-item randomness (teacher-mix coin)");
  s->add_option("--limit", syn.limit, "synthesize only the first N prompts");
  s->add_option("--mix-ratio", syn.mix_ratio, "teacher-mix: probability of a teacher-only sample");
  s->add_option("--candidates", syn.candidates, "reject-sampling: candidates per prompt");
  s->add_option("--k", syn.k, "tokens per generation block");

  AnnotateArgs ann;
  auto* a = app.add_subcommand("annotate", "Build a boundary-predictor corpus from records");
  a->add_option("--config", ann.config);
  a->add_option("--records", ann.records)->required();
  a->add_option("--out", ann.out)->required();
  a->add_option("--samples", ann.samples);
  a->add_option("--source", ann.source, "student or teacher");
  a->add_option("--seed", ann.seed, "segment sampling seed");
  a->add_option("--min-chars", ann.min_chars);
  a->add_option("--max-chars", ann.max_chars);
  a->add_option("--parallelism", ann.parallelism);

  AnalyzeArgs ana;
  auto* z = app.add_subcommand("analyze", "Distribution analytics over record files");
  z->add_option("--records", ana.records, "comma-separated record files")->required();
  z->add_option("--report", ana.report, "output directory")->required();
  z->add_option("--tokenizer", ana.tokenizer, "default or external:<cmd>");
  z->add_option("--top-k", ana.top_k);
  z->add_option("--seed", ana.seed, "PCA sampling seed");
  z->add_option("--max-pca-points", ana.max_pca_points);

  std::string validate_path;
  std::string marker = "</think>";
  auto* v = app.add_subcommand("validate", "Audit record invariants");
  v->add_option("--records", validate_path)->required();
  v->add_option("--marker", marker);

  std::string export_in, export_out;
  auto* e = app.add_subcommand("export", "Convert records to prompt/response JSON Lines");
  e->add_option("--records", export_in)->required();
  e->add_option("--out", export_out)->required();
  e->add_option("--marker", marker);

  std::string script;
  std::string host = "127.0.0.1";
  int port = 8000;
  auto* m = app.add_subcommand("mock-serve", "Serve scripted completion and label endpoints");
  m->add_option("--script", script)->required();
  m->add_option("--port", port);
  m->add_option("--host", host);

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synthesize(syn, out, err);
    if (a->parsed()) return cmd_annotate(ann, out, err);
    if (z->parsed()) return cmd_analyze(ana, out, err);
    if (v->parsed()) return cmd_validate(validate_path, marker, out, err);
    if (e->parsed()) return cmd_export(export_in, export_out, marker, out);
    if (m->parsed()) return cmd_mock_serve(script, host, port, out);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace coopsynth
