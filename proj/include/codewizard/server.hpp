/*
 * Copyright 2026 The Code Wizard Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP/1.1 front end for a Session.
//
//   GET   /api/project
//   GET   /api/metrics?round=<r>
//   PATCH /api/rounds/<r>/assignments
//   POST  /api/save
//   GET   /api/events[?last_revision=<n>]     (text/event-stream)

#ifndef CODEWIZARD_SERVER_HPP
#define CODEWIZARD_SERVER_HPP

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "codewizard/session.hpp"

namespace codewizard {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::chrono::milliseconds heartbeat{15000};
  std::optional<std::filesystem::path> static_dir;
};

class SessionServer {
 public:
  SessionServer(Session& session, ServerOptions options);
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Returns false if the address cannot be bound (e.g. port in use).
  bool Bind();
  int port() const { return port_; }

  /// Serves until Stop(). Requires a successful Bind().
  void Run();
  void Stop();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
  ServerOptions options_;
  int port_ = -1;
};

}  // namespace codewizard

#endif  // CODEWIZARD_SERVER_HPP
