// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "coopsynth/cli.hpp"

int main(int argc, char** argv) {
  return coopsynth::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
