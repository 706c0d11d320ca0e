// Copyright 2026 The coopsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <thread>

#include "coopsynth/mock_backend.hpp"

namespace httplib {
class Server;
}

namespace coopsynth {

// Local HTTP fixture speaking both wire protocols:
//   POST /v1/completions  scripted/procedural completions
//   POST /v1/label        lexicon boundary verdicts
//   POST /v1/reset        rewinds scripted cursors
//   GET  /healthz
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<MockBackend> backend);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);

  // Serves on the calling thread until stop() is called elsewhere.
  void serve_blocking(const std::string& host, int port);

  void stop();

  std::string base_url() const;
  int port() const noexcept { return port_; }

 private:
  void install_routes();

  std::shared_ptr<MockBackend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace coopsynth
