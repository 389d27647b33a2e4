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

#include "codewizard/session.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "codewizard/storage.hpp"

namespace codewizard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kJournal = "journal.jsonl";

}  // namespace

json ToJson(const RevisionEvent& event) {
  json j{{"revision", event.revision},
         {"round", event.round ? json(*event.round) : json(nullptr)},
         {"changed_unit_ids", event.changed_unit_ids},
         {"kappa", event.kappa ? json(*event.kappa) : json(nullptr)}};
  if (event.catch_up) j["catch_up"] = true;
  return j;
}

Session::Session(Project project, ShadeThresholds thresholds,
                 std::optional<fs::path> bundle_dir)
    : thresholds_(thresholds), bundle_dir_(std::move(bundle_dir)) {
  state_ = Build(std::move(project));
}

std::unique_ptr<Session> Session::Open(const fs::path& bundle_dir,
                                       ShadeThresholds thresholds) {
  auto session = std::make_unique<Session>(LoadProject(bundle_dir), thresholds,
                                           bundle_dir);
  const fs::path journal = bundle_dir / kJournal;
  if (!fs::exists(journal)) return session;

  std::ifstream in(journal);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::exception&) {
      // A torn final line from a crash mid-append is dropped.
      break;
    }
    const auto revision = entry.at("revision").get<std::uint64_t>();
    const auto current = session->Current()->project.revision;
    if (revision <= current) continue;
    if (revision != current + 1) {
      throw StorageError(journal.string() + ":" + std::to_string(line_no) +
                         ": journal skips from revision " +
                         std::to_string(current) + " to " +
                         std::to_string(revision));
    }
    auto field = ParseAssignmentField(entry.at("field").get<std::string>());
    if (!field) {
      throw StorageError(journal.string() + ":" + std::to_string(line_no) +
                         ": bad field");
    }
    EditCommand edit{entry.at("coder_id").get<std::string>(),
                     entry.at("unit_id").get<std::string>(), *field,
                     entry.at("code").get<std::string>(), current};
    std::lock_guard<std::mutex> writer(session->writer_);
    Project next = WithAssignment(session->Current()->project,
                                  entry.at("round").get<int>(), edit.unit_id,
                                  edit.coder_id, edit.field, edit.code);
    std::lock_guard<std::mutex> lock(session->state_mutex_);
    session->state_ = session->Build(std::move(next));
  }
  return session;
}

std::shared_ptr<const SessionState> Session::Build(Project project) const {
  auto state = std::make_shared<SessionState>();
  for (const auto& round : project.rounds) {
    state->snapshots.emplace(round.index,
                             ComputeSnapshot(project, round.index, thresholds_));
  }
  state->project = std::move(project);
  return state;
}

std::shared_ptr<const SessionState> Session::Current() const {
  std::lock_guard<std::mutex> lock(state_mutex_);
  return state_;
}

EditResult Session::Apply(int round, const EditCommand& edit) {
  std::lock_guard<std::mutex> writer(writer_);
  return ApplyLocked(round, edit);
}

EditResult Session::ApplyLocked(int round, const EditCommand& edit) {
  const auto current = Current();
  const Project& project = current->project;
  if (project.FindRound(round) == nullptr) {
    throw NoSuchRound("no such round " + std::to_string(round));
  }
  if (edit.base_revision > project.revision) {
    throw InvalidEdit("base_revision",
                      "base_revision " + std::to_string(edit.base_revision) +
                          " is ahead of current revision " +
                          std::to_string(project.revision));
  }
  if (edit.base_revision < project.revision) {
    throw EditConflict(project.revision);
  }

  Project next = WithAssignment(project, round, edit.unit_id, edit.coder_id,
                                edit.field, edit.code);
  const std::uint64_t revision = next.revision;
  auto state = Build(std::move(next));
  AppendJournal(round, edit, revision);

  RevisionEvent event;
  event.revision = revision;
  event.round = round;
  event.changed_unit_ids = {edit.unit_id};
  if (const auto& k = state->snapshots.at(round).kappa.value) {
    event.kappa = k->kappa;
  }
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    state_ = state;
    history_.push_back(std::move(event));
  }
  revision_cv_.notify_all();
  return EditResult{std::move(state), round, edit.unit_id};
}

void Session::AppendJournal(int round, const EditCommand& edit,
                            std::uint64_t revision) {
  if (!bundle_dir_) return;
  const json entry{{"revision", revision},
                   {"round", round},
                   {"coder_id", edit.coder_id},
                   {"unit_id", edit.unit_id},
                   {"field", ToString(edit.field)},
                   {"code", edit.code}};
  std::ofstream out(*bundle_dir_ / kJournal, std::ios::app);
  out << entry.dump() << '\n';
  out.flush();
  if (!out) throw StorageError("cannot append to journal in " +
                               bundle_dir_->string());
}

void Session::Save() {
  std::lock_guard<std::mutex> writer(writer_);
  if (!bundle_dir_) return;
  SaveProject(Current()->project, *bundle_dir_);
  std::error_code ec;
  fs::remove(*bundle_dir_ / kJournal, ec);
}

std::vector<RevisionEvent> Session::EventsAfter(std::uint64_t after) const {
  std::lock_guard<std::mutex> lock(state_mutex_);
  std::vector<RevisionEvent> out;
  for (const auto& e : history_) {
    if (e.revision > after) out.push_back(e);
  }
  return out;
}

std::optional<RevisionEvent> Session::CatchUp(std::uint64_t last_seen) const {
  std::shared_ptr<const SessionState> state;
  std::vector<RevisionEvent> missed;
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    state = state_;
    for (const auto& e : history_) {
      if (e.revision > last_seen) missed.push_back(e);
    }
  }
  if (state->project.revision <= last_seen) return std::nullopt;

  RevisionEvent event;
  event.revision = state->project.revision;
  event.catch_up = true;
  std::set<std::string> seen;
  for (const auto& e : missed) {
    event.round = e.round;
    for (const auto& u : e.changed_unit_ids) {
      if (seen.insert(u).second) event.changed_unit_ids.push_back(u);
    }
  }
  if (event.round) {
    if (const auto& k = state->snapshots.at(*event.round).kappa.value) {
      event.kappa = k->kappa;
    }
  }
  return event;
}

bool Session::WaitForRevision(std::uint64_t after,
                              std::chrono::milliseconds timeout) const {
  std::unique_lock<std::mutex> lock(state_mutex_);
  revision_cv_.wait_for(lock, timeout, [&] {
    return closed_ || state_->project.revision > after;
  });
  return state_->project.revision > after;
}

void Session::Close() {
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    closed_ = true;
  }
  revision_cv_.notify_all();
}

bool Session::closed() const {
  std::lock_guard<std::mutex> lock(state_mutex_);
  return closed_;
}

std::optional<fs::path> Session::journal_path() const {
  if (!bundle_dir_) return std::nullopt;
  return *bundle_dir_ / kJournal;
}

}  // namespace codewizard
