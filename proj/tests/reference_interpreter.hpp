// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Straight-line model of the alternating think loop, used as a test oracle.
// Deliberately shares nothing with the engine: it works on UTF-32 strings,
// has its own copy of the scripted endpoint semantics, its own word scanner
// and its own trimming rule.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace refimpl {

enum class Who { S, T };
enum class End { Marker, Budget, Endpoint };
enum class Fin { Length, Stop, Abort };

struct Entry {
  std::string text;
  std::optional<Fin> finish;
};

struct Script {
  std::deque<Entry> student;  // think entries first, then answer entries
  std::deque<Entry> teacher;
};

struct Params {
  int k = 20;
  std::size_t budget = 160000;
  std::string marker = "</think>";
  bool trim = true;
  bool same_family = false;
  int zero_limit = 2;
  int answer_k = 1024;
  std::size_t answer_budget = 32000;
  std::vector<std::string> lexicon;  // phrases, lowercase, single-space separated
  // Scenario-supplied predictor (UTF-8 text, wants style) -> kept code points.
  // Replaces the lexicon scan when set.
  std::function<std::size_t(const std::string&, bool)> custom;
};

struct OutSpan {
  Who who;
  bool answer;
  std::string text;
  bool truncated;
  std::size_t raw_len;
};

struct Outcome {
  std::vector<OutSpan> spans;
  End end;
  std::vector<std::size_t> forced;
};

inline std::u32string decode(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = s[i];
    int n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = n == 1 ? c : n == 2 ? (c & 0x1F) : n == 3 ? (c & 0x0F) : (c & 0x07);
    for (int j = 1; j < n; ++j) cp = (cp << 6) | (static_cast<unsigned char>(s[i + j]) & 0x3F);
    out.push_back(cp);
    i += n;
  }
  return out;
}

inline std::string encode(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (c >> 18));
      out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

inline bool blank(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f'; }

inline bool punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') || (c >= U'{' && c <= U'~');
}

// Endpoint model: split into (whitespace*, non-whitespace*) tokens, keep k.
inline std::pair<std::u32string, Fin> next_block(std::deque<Entry>& q, int k) {
  if (q.empty()) return {U"", Fin::Stop};
  Entry e = q.front();
  q.pop_front();
  const std::u32string t = decode(e.text);
  std::vector<std::size_t> token_ends;
  std::size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && blank(t[i])) ++i;
    while (i < t.size() && !blank(t[i])) ++i;
    token_ends.push_back(i);
  }
  std::u32string text = t;
  Fin fin = Fin::Stop;
  if (token_ends.size() >= static_cast<std::size_t>(k)) {
    text = t.substr(0, token_ends[static_cast<std::size_t>(k) - 1]);
    fin = Fin::Length;
  }
  if (e.finish) fin = *e.finish;
  return {text, fin};
}

inline std::u32string lower_strip(std::u32string w) {
  for (auto& c : w)
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  std::size_t b = 0, e = w.size();
  while (b < e && punct(w[b])) ++b;
  while (e > b && punct(w[e - 1])) --e;
  return w.substr(b, e - b);
}

// Offset of the first unit whose style-ness differs from want_style.
inline std::size_t scan_keep(const std::u32string& raw, const std::vector<std::string>& lexicon, bool want_style) {
  struct W {
    std::size_t start;
    std::u32string norm;
  };
  std::vector<W> words;
  for (std::size_t i = 0; i < raw.size();) {
    if (blank(raw[i])) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < raw.size() && !blank(raw[i])) ++i;
    words.push_back({b, lower_strip(raw.substr(b, i - b))});
  }
  if (words.empty()) return want_style ? 0 : raw.size();  // one capability unit

  std::vector<std::vector<std::u32string>> phrases;
  for (const auto& p : lexicon) {
    std::vector<std::u32string> ws;
    std::u32string cur;
    for (char32_t c : decode(p)) {
      if (c == U' ') {
        ws.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    ws.push_back(cur);
    phrases.push_back(ws);
  }

  std::size_t w = 0;
  while (w < words.size()) {
    std::size_t best = 0;
    for (const auto& ph : phrases) {
      if (ph.size() <= best || w + ph.size() > words.size()) continue;
      bool ok = true;
      for (std::size_t j = 0; j < ph.size() && ok; ++j) ok = words[w + j].norm == ph[j];
      if (ok) best = ph.size();
    }
    const bool style = best > 0;
    if (style != want_style) return w == 0 ? 0 : words[w].start;
    w += style ? best : 1;
  }
  return raw.size();
}

inline Outcome run(Script script, const Params& p) {
  Outcome out;
  std::u32string acc;
  const std::u32string marker = decode(p.marker);
  Who who = Who::S;
  int empties = 0;
  std::size_t used = 0;

  auto push = [&](Who w, bool answer, const std::u32string& text, bool truncated, std::size_t raw_len) {
    out.spans.push_back({w, answer, encode(text), truncated, raw_len});
    acc += text;
    if (!answer) {
      used += text.size();
      empties = text.empty() ? empties + 1 : 0;
    }
  };

  for (;;) {
    if (used >= p.budget) {
      out.end = End::Budget;
      break;
    }
    auto [raw, fin] = next_block(who == Who::S ? script.student : script.teacher, p.k);

    const std::size_t tail_len = std::min(acc.size(), marker.size() - 1);
    const std::u32string joined = acc.substr(acc.size() - tail_len) + raw;
    const auto hit = joined.find(marker);
    if (hit != std::u32string::npos) {
      const std::size_t cut = hit + marker.size() - tail_len;
      push(who, false, raw.substr(0, cut), cut < raw.size(), raw.size());
      out.end = End::Marker;
      break;
    }
    if (fin == Fin::Abort) {
      if (!raw.empty()) push(who, false, raw, false, raw.size());
      out.end = End::Endpoint;
      break;
    }
    if (raw.empty()) {
      out.end = End::Endpoint;
      break;
    }
    if (empties >= p.zero_limit) {
      std::size_t i = 0;
      while (i < raw.size() && blank(raw[i])) ++i;
      while (i < raw.size() && !blank(raw[i])) ++i;
      out.forced.push_back(out.spans.size());
      push(who, false, raw.substr(0, i), false, i);
      continue;
    }
    const std::size_t keep = p.custom ? p.custom(encode(raw), who == Who::S) : scan_keep(raw, p.lexicon, who == Who::S);
    std::u32string kept = raw.substr(0, keep);
    const bool truncated = keep < raw.size();
    if (truncated && p.trim && !p.same_family) {
      while (!kept.empty() && !blank(kept.back())) kept.pop_back();
    }
    push(who, false, kept, truncated, raw.size());
    if (truncated) who = who == Who::S ? Who::T : Who::S;
  }

  std::size_t answered = 0;
  for (;;) {
    auto [text, fin] = next_block(script.student, p.answer_k);
    push(Who::S, true, text, false, text.size());
    answered += text.size();
    if (fin != Fin::Length || text.empty() || answered >= p.answer_budget) break;
  }
  return out;
}

}  // namespace refimpl
