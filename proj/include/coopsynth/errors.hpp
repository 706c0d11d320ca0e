// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace coopsynth {

// Root of every error thrown by the library. Callers that only care about
// "did it fail" catch this; the subclasses exist so retry and reporting
// logic can discriminate.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a structural invariant (span indices, verdict bounds, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network-level failure. The only error class the gateway retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Endpoint answered with a non-2xx status.
class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body)
      : Error("endpoint returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Endpoint answered 2xx but the body does not follow the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Annotator output is not a JSON array of strings.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Annotator reported a span that does not occur verbatim in the segment.
class VerbatimViolation : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

class StrategyError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class DataError : public Error {
 public:
  DataError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace coopsynth
