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

#ifndef CODEWIZARD_TESTS_FIXTURES_HPP
#define CODEWIZARD_TESTS_FIXTURES_HPP

#include <optional>
#include <string>
#include <vector>

#include "codewizard/model.hpp"
#include "oracles.hpp"

namespace fixtures {

using codewizard::Assignment;
using codewizard::AssignmentMatrix;
using codewizard::Code;
using codewizard::Codebook;
using codewizard::Project;
using codewizard::Round;
using codewizard::RoundMode;
using codewizard::Unit;

inline const std::vector<std::string> kPalette = {
    "#E6194B", "#3CB44B", "#FFE119", "#4363D8", "#F58231", "#911EB4",
    "#42D4F4", "#F032E6", "#BFEF45", "#469990", "#9A6324", "#000075"};

inline Codebook MakeCodebook(const std::vector<std::string>& ids) {
  Codebook book;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    book.codes.push_back({ids[i], "Code " + ids[i], "Definition of " + ids[i],
                          kPalette[i % kPalette.size()]});
  }
  return book;
}

inline std::vector<std::string> Names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Builds a round from a primary grid and an optional secondary grid.
inline Round MakeRound(const oracle::Grid& primary,
                       const oracle::Grid& secondary = {}, int index = 1) {
  Round round;
  round.index = index;
  round.mode = secondary.empty() ? RoundMode::kSingle : RoundMode::kDouble;
  round.assignments = AssignmentMatrix(Names("Unit ", primary.size()),
                                       Names("Coder ", primary.front().size()));
  for (std::size_t u = 0; u < primary.size(); ++u) {
    for (std::size_t c = 0; c < primary[u].size(); ++c) {
      Assignment a{primary[u][c], std::nullopt};
      if (!secondary.empty()) a.secondary = secondary[u][c];
      round.assignments.at(u, c) = a;
    }
  }
  return round;
}

inline Project MakeProject(const Codebook& book, const std::vector<Round>& rounds) {
  Project project;
  project.name = "fixture";
  project.codebook = book;
  const auto& m = rounds.front().assignments;
  for (const auto& id : m.unit_ids()) {
    project.units.push_back({id, "", "Text of " + id, ""});
  }
  project.coders = m.coder_ids();
  project.rounds = rounds;
  return project;
}

// Five coders on five units over codes A, B, C.
inline const oracle::Grid kFiveCoders = {
    {"C", "A", "C", "C", "C"},
    {"A", "B", "B", "B", "A"},
    {"B", "A", "C", "A", "A"},
    {"C", "C", "C", "C", "C"},
    {"B", "B", "B", "A", "A"},
};

inline Codebook FiveCodersCodebook() { return MakeCodebook({"A", "B", "C"}); }
inline Round FiveCodersRound() { return MakeRound(kFiveCoders); }
inline Project FiveCodersProject() {
  return MakeProject(FiveCodersCodebook(), {FiveCodersRound()});
}

// The seven-code codebook of the worked example.
inline Codebook SevenCodeCodebook() {
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"CM", "Computational Mechanism Issue"}, {"CT", "Content Breakdown"},
      {"CD", "Coordination Breakdown"},        {"DS", "Disparate Systems"},
      {"PM", "Paper Mechanism Issue"},         {"SB", "Source Breakdown"},
      {"UP", "Unclear Process"}};
  Codebook book;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    book.codes.push_back({rows[i].first, rows[i].second, "", kPalette[i]});
  }
  return book;
}

}  // namespace fixtures

#endif  // CODEWIZARD_TESTS_FIXTURES_HPP
