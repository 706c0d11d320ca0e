// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/analytics.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "coopsynth/utf8.hpp"

namespace coopsynth::analytics {

std::vector<std::string> default_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = c >= 0x80 || std::isalnum(c) || c == '_';
    if (word) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Tokenizer external_tokenizer(std::string command) {
  return [command = std::move(command)](std::string_view text) {
    char path[] = "/tmp/coopsynth-tok-XXXXXX";
    const int fd = ::mkstemp(path);
    if (fd < 0) throw Error("cannot create temporary file for external tokenizer");
    ::close(fd);
    {
      std::ofstream f(path, std::ios::binary);
      f.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    const std::string cmd = command + " < '" + path + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
      std::remove(path);
      throw Error("cannot run external tokenizer: " + command);
    }
    std::string output;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) output.append(buf, n);
    const int status = ::pclose(pipe);
    std::remove(path);
    if (status != 0) throw Error("external tokenizer exited with status " + std::to_string(status));
    std::vector<std::string> tokens;
    std::istringstream in(output);
    for (std::string t; in >> t;) tokens.push_back(std::move(t));
    return tokens;
  };
}

// ---------------------------------------------------------------------------

TfidfResult tfidf_vectors(std::span<const Document> documents, const Tokenizer& tokenizer, IdfMode idf_mode) {
  if (documents.empty()) throw StructuralError("tf-idf needs at least one document");
  std::vector<std::map<std::string, std::size_t>> counts(documents.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (auto& t : tokenizer(documents[d].text)) ++counts[d][std::move(t)];
    for (const auto& [term, _] : counts[d]) ++df[term];
  }

  TfidfResult out;
  std::map<std::string, std::size_t> index;
  for (const auto& [term, _] : df) {
    index.emplace(term, out.vocabulary.size());
    out.vocabulary.push_back(term);
  }
  const double n = static_cast<double>(documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    CorpusVector v;
    v.doc_id = documents[d].doc_id;
    for (const auto& [term, tf] : counts[d]) {
      const double f = static_cast<double>(df[term]);
      const double idf = idf_mode == IdfMode::Plain ? std::log(n / f) : std::log((1.0 + n) / (1.0 + f)) + 1.0;
      const double w = static_cast<double>(tf) * idf;
      if (w > 0.0) v.entries.emplace(index[term], w);
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

double cosine(const CorpusVector& a, const CorpusVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [_, w] : a.entries) na += w * w;
  for (const auto& [_, w] : b.entries) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double mean_pairwise_similarity(std::span<const CorpusVector> group_a, std::span<const CorpusVector> group_b) {
  std::map<std::string, const CorpusVector*> by_id;
  for (const auto& v : group_b)
    if (!by_id.emplace(v.doc_id, &v).second) throw PairingError("query id '" + v.doc_id + "' appears twice in group b");
  if (group_a.size() != group_b.size()) throw PairingError("groups differ in size");
  if (group_a.empty()) throw PairingError("no pairs to compare");
  std::set<std::string> seen;
  double sum = 0.0;
  for (const auto& a : group_a) {
    if (!seen.insert(a.doc_id).second) throw PairingError("query id '" + a.doc_id + "' appears twice in group a");
    auto it = by_id.find(a.doc_id);
    if (it == by_id.end()) throw PairingError("query id '" + a.doc_id + "' has no partner");
    sum += cosine(a, *it->second);
  }
  return sum / static_cast<double>(group_a.size());
}

// ---------------------------------------------------------------------------
// PCA

EigenResult jacobi_eigen(std::vector<double> a, std::size_t n, double tolerance, int max_sweeps) {
  EigenResult r;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  double frob = 0.0;
  for (double x : a) frob += x * x;
  frob = std::sqrt(frob);
  const double threshold = tolerance * std::max(1.0, frob);

  for (; r.sweeps < max_sweeps; ++r.sweeps) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * at(i, j) * at(i, j);
    if (std::sqrt(off) <= threshold) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = at(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return at(x, x) > at(y, y); });
  r.values.resize(n);
  r.vectors.resize(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    r.values[c] = at(order[c], order[c]);
    for (std::size_t k = 0; k < n; ++k) r.vectors[k * n + c] = v[k * n + order[c]];
  }
  return r;
}

namespace {

void orient(std::vector<double>& axis) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i]) > std::abs(axis[best])) best = i;
  if (axis[best] < 0)
    for (double& x : axis) x = -x;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Unit vector orthogonal to `axis`, from the first canonical direction that
// is not parallel to it.
std::vector<double> orthogonal_fallback(const std::vector<double>& axis) {
  const std::size_t d = axis.size();
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> e(d, 0.0);
    e[j] = 1.0;
    const double proj = axis[j];
    for (std::size_t k = 0; k < d; ++k) e[k] -= proj * axis[k];
    const double n = norm(e);
    if (n > 1e-6) {
      for (double& x : e) x /= n;
      return e;
    }
  }
  return std::vector<double>(d, 0.0);
}

}  // namespace

ProjectionReport pca_project(std::span<const CorpusVector> vectors, std::size_t d) {
  const std::size_t n = vectors.size();
  if (n < 2) throw StructuralError("pca needs at least two vectors");
  if (d < 2) throw StructuralError("pca needs a vocabulary of at least two terms");

  std::vector<double> x(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [term, w] : vectors[i].entries) {
      if (term >= d) throw StructuralError("term index outside the vocabulary");
      x[i * d + term] = w;
    }
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i * d + j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) x[i * d + j] -= mean;
  }
  const double denom = static_cast<double>(n - 1);

  ProjectionReport rep;
  for (double v : x) rep.total_variance += v * v;
  rep.total_variance /= denom;

  std::array<std::vector<double>, 2> axes;
  std::array<double, 2> var{};
  const double eps = 1e-12 * std::max(1.0, rep.total_variance);

  if (d <= n) {
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i * d + a] * x[i * d + b];
        cov[a * d + b] = cov[b * d + a] = s / denom;
      }
    const EigenResult e = jacobi_eigen(std::move(cov), d);
    for (int c = 0; c < 2; ++c) {
      var[c] = std::max(0.0, e.values[c]);
      axes[c].resize(d);
      for (std::size_t k = 0; k < d; ++k) axes[c][k] = e.vectors[k * d + c];
    }
  } else {
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += x[a * d + k] * x[b * d + k];
        gram[a * n + b] = gram[b * n + a] = s / denom;
      }
    const EigenResult e = jacobi_eigen(std::move(gram), n);
    for (int c = 0; c < 2; ++c) {
      var[c] = c < static_cast<int>(n) ? std::max(0.0, e.values[c]) : 0.0;
      axes[c].assign(d, 0.0);
      if (var[c] <= eps) continue;
      // Right singular vector from the left one: X^T u / ||X^T u||.
      for (std::size_t i = 0; i < n; ++i) {
        const double u = e.vectors[i * n + c];
        for (std::size_t k = 0; k < d; ++k) axes[c][k] += x[i * d + k] * u;
      }
      const double len = norm(axes[c]);
      for (double& v : axes[c]) v /= len;
    }
  }

  if (var[0] <= eps) {
    // Every point is the same: canonical directions.
    var = {0.0, 0.0};
    axes[0].assign(d, 0.0);
    axes[1].assign(d, 0.0);
    axes[0][0] = 1.0;
    axes[1][1] = 1.0;
  } else {
    orient(axes[0]);
    if (var[1] <= eps) {
      var[1] = 0.0;
      if (d > n) axes[1] = orthogonal_fallback(axes[0]);
    }
    orient(axes[1]);
  }

  rep.component_axes = axes;
  rep.explained_variance = var;
  for (std::size_t i = 0; i < n; ++i) {
    ProjectionPoint p{vectors[i].doc_id, 0.0, 0.0};
    for (std::size_t k = 0; k < d; ++k) {
      p.x += x[i * d + k] * axes[0][k];
      p.y += x[i * d + k] * axes[1][k];
    }
    rep.points.push_back(std::move(p));
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

double measure(std::string_view text, LengthUnit unit, const Tokenizer& tokenizer) {
  return unit == LengthUnit::Chars ? static_cast<double>(utf8::length(text)) : static_cast<double>(tokenizer(text).size());
}

}  // namespace

OriginRatio origin_ratio(std::span<const SynthesisRecord> records, LengthUnit unit, const Tokenizer& tokenizer) {
  if (records.empty()) throw StructuralError("origin ratio needs at least one record");
  double teacher = 0.0, student = 0.0;
  for (const auto& r : records)
    for (const auto& s : r.spans) (s.origin == Origin::Teacher ? teacher : student) += measure(s.text, unit, tokenizer);
  const double total = teacher + student;
  if (total == 0.0) throw StructuralError("records contain no generated text");
  OriginRatio out;
  out.teacher_fraction = teacher / total;
  out.student_fraction = student / total;
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

LengthStats length_stats(const std::map<std::string, std::vector<double>>& lengths) {
  LengthStats out;
  for (const auto& [name, values] : lengths) {
    if (values.empty()) throw StructuralError("strategy " + name + " has no records");
    LengthSummary s;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.median = percentile(values, 0.5);
    s.p90 = percentile(values, 0.9);
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    out.per_strategy.emplace(name, s);
  }
  for (const auto& [a, sa] : out.per_strategy)
    for (const auto& [b, sb] : out.per_strategy)
      if (a != b) out.mean_differences[{a, b}] = sa.mean - sb.mean;
  return out;
}

std::vector<double> record_lengths(std::span<const SynthesisRecord> records, LengthUnit unit, const Tokenizer& tokenizer) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(measure(reconstruct(r), unit, tokenizer));
  return out;
}

FrequencyTable word_frequency_table(std::span<const LabeledCorpus> corpora, std::size_t top_k, const Tokenizer& tokenizer) {
  if (corpora.empty()) throw StructuralError("word frequency table needs at least one corpus");
  std::vector<std::map<std::string, double>> rel(corpora.size());
  std::set<std::string> all;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& doc : corpora[c].documents)
      for (auto& t : tokenizer(doc)) {
        ++counts[std::move(t)];
        ++total;
      }
    for (const auto& [w, k] : counts) {
      rel[c][w] = static_cast<double>(k) / static_cast<double>(total);
      all.insert(w);
    }
  }

  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& w : all) {
    double best = 0.0;
    for (const auto& m : rel)
      if (auto it = m.find(w); it != m.end()) best = std::max(best, it->second);
    ranked.emplace_back(best, w);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);

  FrequencyTable t;
  for (const auto& c : corpora) t.labels.push_back(c.label);
  for (const auto& [_, w] : ranked) {
    t.words.push_back(w);
    std::vector<double> row;
    for (const auto& m : rel) {
      auto it = m.find(w);
      row.push_back(it == m.end() ? 0.0 : it->second);
    }
    t.frequency.push_back(std::move(row));
  }
  return t;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string to_csv(const FrequencyTable& table) {
  std::string out = "word";
  for (const auto& l : table.labels) out += "," + csv_field(l);
  out += "\n";
  for (std::size_t i = 0; i < table.words.size(); ++i) {
    out += csv_field(table.words[i]);
    for (double v : table.frequency[i]) out += "," + num(v);
    out += "\n";
  }
  return out;
}

std::string to_csv(const LengthStats& stats) {
  std::string out = "strategy,count,mean,median,p90,min,max\n";
  for (const auto& [name, s] : stats.per_strategy)
    out += csv_field(name) + "," + std::to_string(s.count) + "," + num(s.mean) + "," + num(s.median) + "," + num(s.p90) + "," +
           num(s.min) + "," + num(s.max) + "\n";
  out += "\nstrategy_a,strategy_b,mean_difference\n";
  for (const auto& [pair, diff] : stats.mean_differences)
    out += csv_field(pair.first) + "," + csv_field(pair.second) + "," + num(diff) + "\n";
  return out;
}

std::string projection_svg(const ProjectionReport& report, const std::map<std::string, std::string>& labels) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double kW = 640, kH = 480, kPad = 40;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    if (i == 0 || p.x < xmin) xmin = p.x;
    if (i == 0 || p.x > xmax) xmax = p.x;
    if (i == 0 || p.y < ymin) ymin = p.y;
    if (i == 0 || p.y > ymax) ymax = p.y;
  }
  const double xs = xmax > xmin ? (kW - 2 * kPad) / (xmax - xmin) : 1.0;
  const double ys = ymax > ymin ? (kH - 2 * kPad) / (ymax - ymin) : 1.0;

  std::map<std::string, std::size_t> colour;
  for (const auto& [_, label] : labels) colour.emplace(label, 0);
  std::size_t next = 0;
  for (auto& [_, c] : colour) c = next++;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& p : report.points) {
    auto it = labels.find(p.doc_id);
    const std::size_t c = it == labels.end() ? 0 : colour[it->second];
    os << "<circle cx=\"" << kPad + (p.x - xmin) * xs << "\" cy=\"" << kH - kPad - (p.y - ymin) * ys
       << "\" r=\"3\" fill-opacity=\"0.6\" fill=\"" << kPalette[c % std::size(kPalette)] << "\"/>\n";
  }
  double ly = 20;
  for (const auto& [label, c] : colour) {
    os << "<text x=\"10\" y=\"" << ly << "\" font-size=\"12\" fill=\"" << kPalette[c % std::size(kPalette)] << "\">" << label
       << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace coopsynth::analytics
