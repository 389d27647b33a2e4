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

#include "codewizard/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

namespace codewizard {

namespace {

bool HasWhitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool IsHexColor(std::string_view s) {
  if (s.size() != 7 || s[0] != '#') return false;
  return std::all_of(s.begin() + 1, s.end(), [](unsigned char c) {
    return std::isxdigit(c) != 0;
  });
}

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

Violation Make(std::string rule, std::string field, std::string message,
               std::vector<std::string> unit_ids = {},
               std::string coder_id = {}) {
  return Violation{std::move(rule), std::move(field), std::move(message),
                   std::move(unit_ids), std::move(coder_id)};
}

}  // namespace

std::optional<std::size_t> Codebook::IndexOf(std::string_view id) const {
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Codebook::Ids() const {
  std::vector<std::string> ids;
  ids.reserve(codes.size());
  for (const auto& code : codes) ids.push_back(code.id);
  return ids;
}

std::string_view ToString(RoundMode mode) {
  return mode == RoundMode::kDouble ? "double" : "single";
}

std::optional<RoundMode> ParseRoundMode(std::string_view text) {
  if (text == "double") return RoundMode::kDouble;
  if (text == "single") return RoundMode::kSingle;
  return std::nullopt;
}

std::string_view ToString(AssignmentField field) {
  return field == AssignmentField::kPrimary ? "primary" : "secondary";
}

std::optional<AssignmentField> ParseAssignmentField(std::string_view text) {
  if (text == "primary") return AssignmentField::kPrimary;
  if (text == "secondary") return AssignmentField::kSecondary;
  return std::nullopt;
}

AssignmentMatrix::AssignmentMatrix(std::vector<std::string> unit_ids,
                                   std::vector<std::string> coder_ids)
    : unit_ids_(std::move(unit_ids)),
      coder_ids_(std::move(coder_ids)),
      cells_(unit_ids_.size() * coder_ids_.size()) {}

std::optional<std::size_t> AssignmentMatrix::UnitIndex(
    std::string_view unit_id) const {
  auto it = std::find(unit_ids_.begin(), unit_ids_.end(), unit_id);
  if (it == unit_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - unit_ids_.begin());
}

std::optional<std::size_t> AssignmentMatrix::CoderIndex(
    std::string_view coder_id) const {
  auto it = std::find(coder_ids_.begin(), coder_ids_.end(), coder_id);
  if (it == coder_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - coder_ids_.begin());
}

const Round* Project::FindRound(int index) const {
  for (const auto& round : rounds) {
    if (round.index == index) return &round;
  }
  return nullptr;
}

std::vector<std::string> Project::UnitIds() const {
  std::vector<std::string> ids;
  ids.reserve(units.size());
  for (const auto& unit : units) ids.push_back(unit.id);
  return ids;
}

std::vector<Violation> ValidateCodebook(const Codebook& codebook) {
  std::vector<Violation> out;
  if (codebook.codes.size() < 2) {
    out.push_back(Make("min_codes", "codes", "fewer than 2 codes"));
  }
  std::set<std::string> ids;
  std::set<std::string> colors;
  for (std::size_t i = 0; i < codebook.codes.size(); ++i) {
    const Code& code = codebook.codes[i];
    const std::string where = "codes[" + std::to_string(i) + "]";
    if (code.id.empty()) {
      out.push_back(Make("empty_id", where + ".id", "code id is empty"));
    } else if (HasWhitespace(code.id)) {
      out.push_back(Make("id_whitespace", where + ".id",
                         "code id '" + code.id + "' contains whitespace"));
    }
    if (!code.id.empty() && !ids.insert(code.id).second) {
      out.push_back(Make("duplicate_id", where + ".id",
                         "duplicate code id '" + code.id + "'"));
    }
    if (!IsHexColor(code.color)) {
      out.push_back(Make("invalid_color", where + ".color",
                         "code '" + code.id + "' has color '" + code.color +
                             "', expected #RRGGBB"));
    } else if (!colors.insert(Upper(code.color)).second) {
      out.push_back(Make("duplicate_color", where + ".color",
                         "code '" + code.id + "' reuses color " + code.color));
    }
  }
  return out;
}

std::vector<Violation> ValidateUnits(std::span<const Unit> units) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const Unit& unit = units[i];
    const std::string where = "units[" + std::to_string(i) + "]";
    if (unit.id.empty()) {
      out.push_back(Make("empty_id", where + ".id", "unit id is empty"));
    } else if (!ids.insert(unit.id).second) {
      out.push_back(Make("duplicate_id", where + ".id",
                         "duplicate unit id '" + unit.id + "'", {unit.id}));
    }
    if (unit.text.empty()) {
      out.push_back(Make("empty_text", where + ".text",
                         "unit '" + unit.id + "' has empty text", {unit.id}));
    }
  }
  return out;
}

std::vector<Violation> ValidateRound(const Round& round,
                                     const Project& project) {
  std::vector<Violation> out;
  const AssignmentMatrix& m = round.assignments;

  if (m.unit_ids() != project.UnitIds()) {
    out.push_back(Make("unit_set_mismatch", "units",
                       "unit rows differ from the project's units"));
  }
  std::set<std::string> seen;
  for (const auto& coder : m.coder_ids()) {
    if (!seen.insert(coder).second) {
      out.push_back(Make("duplicate_coder", "coders",
                         "coder '" + coder + "' appears twice", {},
                         coder));
    }
    if (std::find(project.coders.begin(), project.coders.end(), coder) ==
        project.coders.end()) {
      out.push_back(Make("unknown_coder", "coders",
                         "coder '" + coder + "' is not in the roster",
                         {}, coder));
    }
  }

  std::vector<std::string> with_secondary;
  std::size_t present = 0;
  for (std::size_t u = 0; u < m.num_units(); ++u) {
    const std::string& unit = m.unit_ids()[u];
    for (std::size_t c = 0; c < m.num_coders(); ++c) {
      const std::string& coder = m.coder_ids()[c];
      const auto& cell = m.at(u, c);
      const std::string cell_name = unit + " / " + coder;
      if (!cell) {
        out.push_back(Make("missing_assignment", "assignments",
                           "missing assignment " + cell_name, {unit},
                           coder));
        continue;
      }
      ++present;
      if (!project.codebook.IndexOf(cell->primary)) {
        out.push_back(Make("unknown_code", "primary",
                           "unknown primary code '" + cell->primary +
                               "' at " + cell_name,
                           {unit}, coder));
      }
      if (cell->secondary) {
        with_secondary.push_back(unit);
        if (!project.codebook.IndexOf(*cell->secondary)) {
          out.push_back(Make("unknown_code", "secondary",
                             "unknown secondary code '" +
                                 *cell->secondary + "' at " + cell_name,
                             {unit}, coder));
        }
      } else if (round.mode == RoundMode::kDouble) {
        out.push_back(Make("missing_secondary", "secondary",
                           "missing secondary code at " + cell_name,
                           {unit}, coder));
      }
    }
  }
  if (round.mode == RoundMode::kSingle && !with_secondary.empty() &&
      with_secondary.size() != present) {
    with_secondary.erase(
        std::unique(with_secondary.begin(), with_secondary.end()),
        with_secondary.end());
    out.push_back(Make("mixed_secondary", "secondary",
                       "some but not all assignments carry a "
                                "secondary code in a single-coding round",
                       std::move(with_secondary)));
  }
  const std::string scope = "rounds[" + std::to_string(round.index) + "].";
  for (auto& v : out) v.field = scope + v.field;
  return out;
}

std::vector<Violation> ValidateProject(const Project& project) {
  std::vector<Violation> out = ValidateCodebook(project.codebook);
  auto units = ValidateUnits(project.units);
  out.insert(out.end(), units.begin(), units.end());

  std::set<std::string> coders;
  for (const auto& coder : project.coders) {
    if (coder.empty()) {
      out.push_back(Make("empty_id", "coders", "coder id is empty"));
    } else if (!coders.insert(coder).second) {
      out.push_back(Make("duplicate_coder", "coders",
                         "duplicate coder id '" + coder + "'", {}, coder));
    }
  }
  std::set<int> indices;
  for (const auto& round : project.rounds) {
    if (round.index < 1 || !indices.insert(round.index).second) {
      out.push_back(Make("bad_round_index", "rounds",
                         "round index " + std::to_string(round.index) +
                             " is not a unique positive integer"));
    }
    auto found = ValidateRound(round, project);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

namespace {

std::string ResolveCode(const Codebook& codebook, const std::string& token) {
  if (codebook.IndexOf(token)) return token;
  for (const auto& code : codebook.codes) {
    if (!code.label.empty() && EqualsIgnoreCase(code.label, token)) {
      return code.id;
    }
  }
  return token;
}

}  // namespace

Round Aggregate(std::span<const CoderSheet> sheets, const Codebook& codebook,
                std::span<const Unit> units, const AggregateOptions& options) {
  std::vector<std::string> unit_ids;
  unit_ids.reserve(units.size());
  for (const auto& unit : units) unit_ids.push_back(unit.id);

  std::vector<std::string> coder_ids;
  for (const auto& sheet : sheets) {
    if (sheet.coder_id.empty()) {
      throw RejectionError("coder sheet without a coder id");
    }
    if (std::find(coder_ids.begin(), coder_ids.end(), sheet.coder_id) !=
        coder_ids.end()) {
      throw RejectionError("coder '" + sheet.coder_id +
                           "' submitted more than one sheet");
    }
    coder_ids.push_back(sheet.coder_id);
  }

  Round round;
  round.index = options.round_index;
  round.note = options.note;
  round.assignments = AssignmentMatrix(std::move(unit_ids), coder_ids);
  AssignmentMatrix& m = round.assignments;

  std::size_t present = 0;
  std::size_t with_secondary = 0;
  for (std::size_t c = 0; c < sheets.size(); ++c) {
    std::vector<bool> filled(m.num_units(), false);
    for (const auto& row : sheets[c].rows) {
      auto u = m.UnitIndex(row.unit_id);
      if (!u) {
        throw RejectionError("coder '" + sheets[c].coder_id +
                             "' references unknown unit id '" + row.unit_id +
                             "'");
      }
      if (filled[*u]) {
        throw RejectionError("coder '" + sheets[c].coder_id +
                             "' codes unit '" + row.unit_id + "' twice");
      }
      filled[*u] = true;
      if (!row.primary) continue;
      Assignment a{ResolveCode(codebook, *row.primary), std::nullopt};
      if (row.secondary) a.secondary = ResolveCode(codebook, *row.secondary);
      ++present;
      if (a.secondary) ++with_secondary;
      m.at(*u, c) = std::move(a);
    }
  }

  if (options.mode) {
    round.mode = *options.mode;
  } else {
    round.mode = (present > 0 && with_secondary == present)
                     ? RoundMode::kDouble
                     : RoundMode::kSingle;
  }
  return round;
}

Project WithAssignment(const Project& project, int round_index,
                       std::string_view unit_id, std::string_view coder_id,
                       AssignmentField field, std::string_view code_id) {
  Project next = project;
  Round* round = nullptr;
  for (auto& r : next.rounds) {
    if (r.index == round_index) round = &r;
  }
  if (round == nullptr) {
    throw InvalidEdit("round", "no such round " + std::to_string(round_index));
  }
  auto u = round->assignments.UnitIndex(unit_id);
  if (!u) {
    throw InvalidEdit("unit_id", "unknown unit '" + std::string(unit_id) + "'");
  }
  auto c = round->assignments.CoderIndex(coder_id);
  if (!c) {
    throw InvalidEdit("coder_id",
                      "unknown coder '" + std::string(coder_id) + "'");
  }
  if (!project.codebook.IndexOf(code_id)) {
    throw InvalidEdit("code", "unknown code '" + std::string(code_id) + "'");
  }
  auto& cell = round->assignments.at(*u, *c);
  if (field == AssignmentField::kPrimary) {
    if (cell) {
      cell->primary = std::string(code_id);
    } else {
      cell = Assignment{std::string(code_id), std::nullopt};
    }
  } else {
    if (round->mode != RoundMode::kDouble) {
      throw InvalidEdit("field",
                        "secondary codes are not used in single-coding rounds");
    }
    if (!cell) {
      throw InvalidEdit("field", "cannot set a secondary code on a cell "
                                 "without a primary code");
    }
    cell->secondary = std::string(code_id);
  }
  ++next.revision;
  return next;
}

Project WithCodebook(const Project& project, Codebook codebook) {
  Project next = project;
  next.codebook = std::move(codebook);
  ++next.revision;
  return next;
}

Project WithRound(const Project& project, Round round) {
  if (project.FindRound(round.index) != nullptr) {
    throw RejectionError("round " + std::to_string(round.index) +
                         " already exists");
  }
  Project next = project;
  for (const auto& coder : round.assignments.coder_ids()) {
    if (std::find(next.coders.begin(), next.coders.end(), coder) ==
        next.coders.end()) {
      next.coders.push_back(coder);
    }
  }
  next.rounds.push_back(std::move(round));
  ++next.revision;
  return next;
}

}  // namespace codewizard
