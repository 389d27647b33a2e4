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

// Project data model: codebook, units, coders, rounds and assignments.
//
// Every type here is a plain value. Mutating helpers (WithAssignment,
// WithCodebook, WithRound) return a new Project whose revision is one
// higher than the input; nothing is modified in place, so snapshots can be
// shared across threads freely.

#ifndef CODEWIZARD_MODEL_HPP
#define CODEWIZARD_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codewizard/error.hpp"

namespace codewizard {

struct Code {
  std::string id;  // short token such as "SB"
  std::string label;
  std::string definition;
  std::string color;  // "#RRGGBB"

  bool operator==(const Code&) const = default;
};

/// Closed set of codes. The order of `codes` is the row/column order of
/// every matrix computed downstream.
struct Codebook {
  std::vector<Code> codes;
  std::string instructions;

  std::size_t size() const { return codes.size(); }
  std::optional<std::size_t> IndexOf(std::string_view id) const;
  std::vector<std::string> Ids() const;

  bool operator==(const Codebook&) const = default;
};

struct Unit {
  std::string id;
  std::string timestamp;  // as captured, e.g. "10:08 6/7/16"
  std::string text;
  std::string source_link;  // opaque locator

  bool operator==(const Unit&) const = default;
};

/// One coder's codes for one unit. Code ids are kept as raw tokens so that
/// references to codes missing from the codebook survive until validation.
struct Assignment {
  std::string primary;
  std::optional<std::string> secondary;

  bool operator==(const Assignment&) const = default;
};

enum class RoundMode { kSingle, kDouble };

std::string_view ToString(RoundMode mode);
std::optional<RoundMode> ParseRoundMode(std::string_view text);

/// Units x coders grid of optional assignments. An empty cell is an
/// explicitly missing assignment.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(std::vector<std::string> unit_ids,
                   std::vector<std::string> coder_ids);

  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  const std::vector<std::string>& coder_ids() const { return coder_ids_; }
  std::size_t num_units() const { return unit_ids_.size(); }
  std::size_t num_coders() const { return coder_ids_.size(); }

  const std::optional<Assignment>& at(std::size_t unit,
                                      std::size_t coder) const {
    return cells_[unit * coder_ids_.size() + coder];
  }
  std::optional<Assignment>& at(std::size_t unit, std::size_t coder) {
    return cells_[unit * coder_ids_.size() + coder];
  }

  std::optional<std::size_t> UnitIndex(std::string_view unit_id) const;
  std::optional<std::size_t> CoderIndex(std::string_view coder_id) const;

  bool operator==(const AssignmentMatrix&) const = default;

 private:
  std::vector<std::string> unit_ids_;
  std::vector<std::string> coder_ids_;
  std::vector<std::optional<Assignment>> cells_;
};

struct Round {
  int index = 1;  // 1-based
  RoundMode mode = RoundMode::kSingle;
  AssignmentMatrix assignments;
  std::string note;

  bool operator==(const Round&) const = default;
};

struct Project {
  std::string name;
  Codebook codebook;
  std::vector<Unit> units;
  std::vector<std::string> coders;
  std::vector<Round> rounds;
  std::uint64_t revision = 1;

  const Round* FindRound(int index) const;
  std::vector<std::string> UnitIds() const;

  bool operator==(const Project&) const = default;
};

/// A broken structural rule. Violations are data; validation never throws.
struct Violation {
  std::string rule;   // machine-readable rule name, e.g. "missing_assignment"
  std::string field;  // offending field, e.g. "codes[2].id"
  std::string message;
  std::vector<std::string> unit_ids;
  std::string coder_id;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> ValidateCodebook(const Codebook& codebook);
std::vector<Violation> ValidateUnits(std::span<const Unit> units);
std::vector<Violation> ValidateRound(const Round& round, const Project& project);

/// Codebook, units, roster and every round.
std::vector<Violation> ValidateProject(const Project& project);

/// One row of a coder sheet. A blank primary cell is a missing assignment.
struct SheetRow {
  std::string unit_id;
  std::optional<std::string> primary;
  std::optional<std::string> secondary;
  std::size_t line = 0;

  bool operator==(const SheetRow&) const = default;
};

struct CoderSheet {
  std::string coder_id;
  std::vector<SheetRow> rows;

  bool operator==(const CoderSheet&) const = default;
};

struct AggregateOptions {
  int round_index = 1;
  /// Taken from the bundle manifest when known; inferred otherwise (double
  /// iff every present assignment carries a secondary code).
  std::optional<RoundMode> mode;
  std::string note;
};

/// Combines per-coder sheets into one round. Rows follow `units` order and
/// columns follow sheet order. Code tokens equal to a code id are kept;
/// tokens matching a code label (case-insensitive) are resolved to its id;
/// anything else is kept verbatim and reported by ValidateRound.
///
/// Throws RejectionError when a sheet names a unit not in `units` or two
/// sheets declare the same coder id.
Round Aggregate(std::span<const CoderSheet> sheets, const Codebook& codebook,
                std::span<const Unit> units, const AggregateOptions& options = {});

enum class AssignmentField { kPrimary, kSecondary };

std::string_view ToString(AssignmentField field);
std::optional<AssignmentField> ParseAssignmentField(std::string_view text);

/// Rejected edit; `field()` names the offending request field.
class InvalidEdit : public RejectionError {
 public:
  InvalidEdit(std::string field, const std::string& what)
      : RejectionError(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Sets one cell's primary or secondary code. Throws InvalidEdit for an
/// unknown round, unit, coder or code, for a secondary edit in a
/// single-coding round, and for a secondary edit on a missing cell.
Project WithAssignment(const Project& project, int round_index,
                       std::string_view unit_id, std::string_view coder_id,
                       AssignmentField field, std::string_view code_id);

/// Replaces the codebook. Assignments that reference removed codes are left
/// in place and show up as violations.
Project WithCodebook(const Project& project, Codebook codebook);

/// Appends a round; coders new to the roster are added in column order.
Project WithRound(const Project& project, Round round);

}  // namespace codewizard

#endif  // CODEWIZARD_MODEL_HPP
