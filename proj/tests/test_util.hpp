// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "coopsynth/mock_backend.hpp"
#include "coopsynth/orchestrator.hpp"

namespace testutil {

using namespace coopsynth;

inline SynthesisConfig mock_config() {
  SynthesisConfig c = default_config();
  c.student.base_url = "mock://";
  c.teacher.base_url = "mock://";
  return c;
}

inline MockScript script_with(std::vector<MockTrajectory> trajectories, bool procedural = false) {
  MockScript s;
  s.models = {{"student", Origin::Student}, {"teacher", Origin::Teacher}};
  s.trajectories = std::move(trajectories);
  if (!procedural) s.procedural.reset();
  return s;
}

struct MockRig {
  std::shared_ptr<MockBackend> backend;
  std::shared_ptr<MockCompletionClient> client;
  Engine engine;
};

inline MockRig make_rig(const SynthesisConfig& config, MockScript script) {
  auto backend = std::make_shared<MockBackend>(std::move(script));
  auto client = std::make_shared<MockCompletionClient>(backend);
  Engine engine = Engine::from_config(config, client);
  return {backend, client, std::move(engine)};
}

inline SynthesisRecord random_record(std::mt19937_64& rng, const std::string& id) {
  static const char* kPieces[] = {"Okay, ", "wait ", "gcd(a,b) ", "x = 3; ", "\n", "é", "∑ ", "", "so ", "then"};
  SynthesisRecord r;
  r.id = id;
  r.prompt = "question " + id;
  r.strategy = "student-only";
  r.config_fingerprint = "0123456789abcdef0123456789abcdef";
  r.terminated_by = Termination::EndpointStop;
  const std::size_t n = rng() % 8;
  for (std::size_t i = 0; i < n; ++i) {
    Span s;
    s.index = i;
    s.origin = rng() % 2 ? Origin::Student : Origin::Teacher;
    s.role = i + 2 >= n ? Role::Answer : Role::Think;
    const std::size_t parts = rng() % 4;
    for (std::size_t p = 0; p < parts; ++p) s.text += kPieces[rng() % std::size(kPieces)];
    std::size_t len = 0;
    for (unsigned char c : s.text) len += (c & 0xC0) != 0x80;
    s.truncated = rng() % 3 == 0;
    s.raw_length_chars = len + (s.truncated ? 1 + rng() % 5 : 0);
    r.spans.push_back(std::move(s));
  }
  return r;
}

}  // namespace testutil
