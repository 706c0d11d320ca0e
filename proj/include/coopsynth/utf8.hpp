// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Character coordinates used everywhere in the engine are Unicode code
// points over UTF-8 encoded strings. Teacher, student, and predictor each
// have their own tokenizer, so code points are the only shared unit.
namespace coopsynth::utf8 {

// Number of code points. Invalid lead bytes count as one character each.
std::size_t length(std::string_view s) noexcept;

// Byte offset of the code point with index `chars`; clamps to s.size().
std::size_t byte_offset(std::string_view s, std::size_t chars) noexcept;

// Code-point index of a byte offset that sits on a character boundary.
std::size_t char_offset(std::string_view s, std::size_t bytes) noexcept;

// First `chars` code points of s.
std::string_view prefix(std::string_view s, std::size_t chars) noexcept;

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace coopsynth::utf8
