// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "coopsynth/utf8.hpp"

namespace coopsynth::utf8 {
namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::size_t byte_offset(std::string_view s, std::size_t chars) noexcept {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (seen == chars) return i;
    ++seen;
  }
  return s.size();
}

std::size_t char_offset(std::string_view s, std::size_t bytes) noexcept {
  return length(s.substr(0, bytes < s.size() ? bytes : s.size()));
}

std::string_view prefix(std::string_view s, std::size_t chars) noexcept {
  return s.substr(0, byte_offset(s, chars));
}

}  // namespace coopsynth::utf8
