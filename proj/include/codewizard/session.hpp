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

// Live reconciliation session state.
//
// Edits go through a single writer. Each accepted edit mints a new
// revision, recomputes every round's metrics, appends to the journal and
// publishes a new immutable SessionState; readers only ever see whole
// states, so a project and its metrics always come from the same revision.

#ifndef CODEWIZARD_SESSION_HPP
#define CODEWIZARD_SESSION_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "codewizard/metrics.hpp"
#include "codewizard/model.hpp"
#include "codewizard/snapshot.hpp"

namespace codewizard {

struct EditCommand {
  std::string coder_id;
  std::string unit_id;
  AssignmentField field = AssignmentField::kPrimary;
  std::string code;
  std::uint64_t base_revision = 0;
};

/// Stale base revision; the client should refetch.
class EditConflict : public Error {
 public:
  explicit EditConflict(std::uint64_t current)
      : Error("stale base_revision; current revision is " +
              std::to_string(current)),
        current_revision_(current) {}
  std::uint64_t current_revision() const { return current_revision_; }

 private:
  std::uint64_t current_revision_;
};

/// Raised for a round index that does not exist.
class NoSuchRound : public RejectionError {
 public:
  using RejectionError::RejectionError;
};

struct SessionState {
  Project project;
  std::map<int, MetricsSnapshot> snapshots;  // by round index
};

struct RevisionEvent {
  std::uint64_t revision = 0;
  std::optional<int> round;
  std::vector<std::string> changed_unit_ids;
  std::optional<double> kappa;
  bool catch_up = false;

  bool operator==(const RevisionEvent&) const = default;
};

nlohmann::json ToJson(const RevisionEvent& event);

struct EditResult {
  std::shared_ptr<const SessionState> state;
  int round = 0;
  std::string unit_id;
};

class Session {
 public:
  /// In-memory session; Save() is a no-op without a bundle directory.
  Session(Project project, ShadeThresholds thresholds = {},
          std::optional<std::filesystem::path> bundle_dir = std::nullopt);

  /// Loads the bundle and replays journal entries newer than its revision.
  static std::unique_ptr<Session> Open(const std::filesystem::path& bundle_dir,
                                       ShadeThresholds thresholds = {});

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::shared_ptr<const SessionState> Current() const;

  /// Throws NoSuchRound, InvalidEdit (with the offending field) or
  /// EditConflict. Metrics are recomputed before returning.
  EditResult Apply(int round, const EditCommand& edit);

  /// Folds the current revision into the bundle and clears the journal.
  void Save();

  /// Events with revision > `after`, oldest first.
  std::vector<RevisionEvent> EventsAfter(std::uint64_t after) const;

  /// Single event summarizing everything after `last_seen`, or nothing if
  /// the client is up to date.
  std::optional<RevisionEvent> CatchUp(std::uint64_t last_seen) const;

  /// Blocks until a revision newer than `after` exists, the session closes
  /// or the timeout expires. Returns true if a newer revision exists.
  bool WaitForRevision(std::uint64_t after,
                       std::chrono::milliseconds timeout) const;

  /// Wakes all waiters; subsequent waits return immediately.
  void Close();
  bool closed() const;

  const ShadeThresholds& thresholds() const { return thresholds_; }
  std::optional<std::filesystem::path> journal_path() const;

 private:
  std::shared_ptr<const SessionState> Build(Project project) const;
  void AppendJournal(int round, const EditCommand& edit,
                     std::uint64_t revision);
  EditResult ApplyLocked(int round, const EditCommand& edit);

  ShadeThresholds thresholds_;
  std::optional<std::filesystem::path> bundle_dir_;

  std::mutex writer_;  // serializes Apply and Save

  mutable std::mutex state_mutex_;
  mutable std::condition_variable revision_cv_;
  std::shared_ptr<const SessionState> state_;
  std::vector<RevisionEvent> history_;
  bool closed_ = false;
};

}  // namespace codewizard

#endif  // CODEWIZARD_SESSION_HPP
