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

#include "codewizard/server.hpp"

#include <atomic>
#include <charconv>
#include <mutex>
#include <thread>

#include "httplib.h"

namespace codewizard {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr std::chrono::milliseconds kPollSlice{100};

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void ReplyError(httplib::Response& res, int status, const std::string& message,
                json extra = json::object()) {
  extra["error"] = message;
  Reply(res, status, extra);
}

template <typename T>
std::optional<T> ParseNumber(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string EventFrame(const RevisionEvent& event) {
  return "event: revision\nid: " + std::to_string(event.revision) +
         "\ndata: " + ToJson(event).dump() + "\n\n";
}

std::optional<EditCommand> ParseEdit(const json& body, std::string& bad_field) {
  EditCommand edit;
  auto text = [&](const char* name, std::string& out) {
    if (!body.contains(name) || !body.at(name).is_string()) {
      bad_field = name;
      return false;
    }
    out = body.at(name).get<std::string>();
    return true;
  };
  std::string field;
  if (!text("coder_id", edit.coder_id) || !text("unit_id", edit.unit_id) ||
      !text("field", field) || !text("code", edit.code)) {
    return std::nullopt;
  }
  auto parsed = ParseAssignmentField(field);
  if (!parsed) {
    bad_field = "field";
    return std::nullopt;
  }
  edit.field = *parsed;
  if (!body.contains("base_revision") ||
      !body.at("base_revision").is_number_unsigned()) {
    bad_field = "base_revision";
    return std::nullopt;
  }
  edit.base_revision = body.at("base_revision").get<std::uint64_t>();
  return edit;
}

}  // namespace

class SessionServer::Impl {
 public:
  Impl(Session& session, const ServerOptions& options)
      : session_(session), options_(options) {
    // The library default enables SO_REUSEPORT, which would let a second
    // instance share the port instead of failing to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    Routes();
  }

  httplib::Server server;
  std::atomic<bool> stopping{false};
  std::mutex run_mutex;
  bool started = false;
  std::atomic<bool> finished{false};

 private:
  void Routes() {
    server.Get("/api/project", [this](const httplib::Request&,
                                      httplib::Response& res) {
      Reply(res, 200, ProjectJson(session_.Current()->project));
    });

    server.Get("/api/metrics", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      const auto state = session_.Current();
      int round = state->project.rounds.empty()
                      ? 0
                      : state->project.rounds.back().index;
      if (req.has_param("round")) {
        auto parsed = ParseNumber<int>(req.get_param_value("round"));
        round = parsed.value_or(0);
      }
      auto it = state->snapshots.find(round);
      if (it == state->snapshots.end()) {
        ReplyError(res, 404, "no such round " + req.get_param_value("round"));
        return;
      }
      Reply(res, 200, ToJson(it->second));
    });

    server.Patch(R"(/api/rounds/(\d+)/assignments)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   Patch(req, res);
                 });

    server.Post("/api/save", [this](const httplib::Request&,
                                    httplib::Response& res) {
      try {
        session_.Save();
        Reply(res, 200, {{"revision", session_.Current()->project.revision}});
      } catch (const Error& e) {
        ReplyError(res, 500, e.what());
      }
    });

    server.Get("/api/events", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      Events(req, res);
    });

    if (options_.static_dir) {
      server.set_mount_point("/", options_.static_dir->string());
    }
  }

  void Patch(const httplib::Request& req, httplib::Response& res) {
    const auto round = ParseNumber<int>(req.matches[1].str());
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      ReplyError(res, 400, "request body is not JSON");
      return;
    }
    if (!body.is_object()) {
      ReplyError(res, 400, "request body must be a JSON object");
      return;
    }
    std::string bad_field;
    auto edit = ParseEdit(body, bad_field);
    if (!edit) {
      ReplyError(res, 422, "missing or invalid '" + bad_field + "'",
                 {{"field", bad_field}});
      return;
    }
    try {
      const EditResult result = session_.Apply(round.value_or(0), *edit);
      const MetricsSnapshot& snap = result.state->snapshots.at(result.round);
      json agreement;
      const json units = AgreementJson(snap).at("units");
      for (const auto& row : units) {
        if (row.at("unit_id") == result.unit_id) agreement = row;
      }
      Reply(res, 200,
            {{"revision", result.state->project.revision},
             {"round", result.round},
             {"changed_unit_ids", json::array({result.unit_id})},
             {"kappa", KappaJson(snap)},
             {"unit_agreement", agreement},
             {"cdm", CdmJson(snap)}});
    } catch (const NoSuchRound& e) {
      ReplyError(res, 404, e.what());
    } catch (const InvalidEdit& e) {
      ReplyError(res, 422, e.what(), {{"field", e.field()}});
    } catch (const EditConflict& e) {
      ReplyError(res, 409, e.what(),
                 {{"current_revision", e.current_revision()}});
    } catch (const Error& e) {
      ReplyError(res, 500, e.what());
    }
  }

  void Events(const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint64_t> last_seen;
    if (req.has_param("last_revision")) {
      last_seen = ParseNumber<std::uint64_t>(req.get_param_value("last_revision"));
    } else if (req.has_header("Last-Event-ID")) {
      last_seen = ParseNumber<std::uint64_t>(req.get_header_value("Last-Event-ID"));
    }

    struct Cursor {
      std::uint64_t last_sent = 0;
      std::optional<RevisionEvent> pending_catch_up;
      std::chrono::steady_clock::time_point last_write;
    };
    auto cursor = std::make_shared<Cursor>();
    cursor->last_write = std::chrono::steady_clock::now();
    if (last_seen) {
      cursor->last_sent = *last_seen;
      cursor->pending_catch_up = session_.CatchUp(*last_seen);
      if (cursor->pending_catch_up) {
        cursor->last_sent = cursor->pending_catch_up->revision;
      }
    } else {
      cursor->last_sent = session_.Current()->project.revision;
    }

    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, cursor](std::size_t, httplib::DataSink& sink) {
          auto write = [&](const std::string& frame) {
            cursor->last_write = std::chrono::steady_clock::now();
            return sink.write(frame.data(), frame.size());
          };
          if (cursor->pending_catch_up) {
            const std::string frame = EventFrame(*cursor->pending_catch_up);
            cursor->pending_catch_up.reset();
            return write(frame);
          }
          while (!stopping.load()) {
            if (session_.WaitForRevision(cursor->last_sent, kPollSlice)) {
              for (const auto& event : session_.EventsAfter(cursor->last_sent)) {
                if (!write(EventFrame(event))) return false;
                cursor->last_sent = event.revision;
              }
              return true;
            }
            if (!sink.is_writable()) return false;
            if (std::chrono::steady_clock::now() - cursor->last_write >=
                options_.heartbeat) {
              return write(": keepalive\n\n");
            }
          }
          sink.done();
          return true;
        });
  }

  Session& session_;
  ServerOptions options_;
};

SessionServer::SessionServer(Session& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, options)),
      options_(std::move(options)) {}

SessionServer::~SessionServer() { Stop(); }

bool SessionServer::Bind() {
  if (options_.port == 0) {
    port_ = impl_->server.bind_to_any_port(options_.host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(options_.host, options_.port)) return false;
  port_ = options_.port;
  return true;
}

void SessionServer::Run() {
  {
    std::lock_guard<std::mutex> lock(impl_->run_mutex);
    if (impl_->stopping.load()) return;
    impl_->started = true;
  }
  impl_->server.listen_after_bind();
  impl_->finished.store(true);
}

void SessionServer::Stop() {
  std::lock_guard<std::mutex> lock(impl_->run_mutex);
  impl_->stopping.store(true);
  if (!impl_->started) return;
  // stop() is a no-op until the listen loop has started, so wait for it.
  while (!impl_->finished.load()) {
    if (impl_->server.is_running()) {
      impl_->server.stop();
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

}  // namespace codewizard
