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

// Agreement and disagreement statistics over one coding round.
//
// All functions are pure. Matrices are indexed in codebook order and hold
// full-precision values; rounding happens only when presenting.

#ifndef CODEWIZARD_METRICS_HPP
#define CODEWIZARD_METRICS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codewizard/model.hpp"

namespace codewizard {

struct UnitAgreement {
  std::string unit_id;
  double p_i = 0.0;  // share of agreeing coder pairs
  std::size_t n_coders = 0;

  bool operator==(const UnitAgreement&) const = default;
};

/// Pairwise agreement on one unit's primary codes. Missing cells are
/// skipped; throws MetricError("insufficient coders for unit") when fewer
/// than two coders are present.
UnitAgreement PerUnitAgreement(const Round& round, std::string_view unit_id);

struct KappaResult {
  double kappa = 0.0;
  double p_bar = 0.0;  // mean observed agreement
  double p_e = 0.0;    // expected chance agreement
  std::size_t n_coders = 0;
  std::size_t n_units_included = 0;
  std::vector<std::string> excluded_units;

  bool operator==(const KappaResult&) const = default;
};

/// Fleiss' kappa over primary codes. Units with any missing primary are
/// excluded and listed. Throws MetricError with fewer than two coders, with
/// no complete unit, or when every rating falls in one category.
KappaResult FleissKappa(const Round& round);

/// Team scope when `coder_id` is empty.
struct MetricScope {
  std::optional<std::string> coder_id;

  static MetricScope Team() { return {}; }
  static MetricScope Coder(std::string id) { return {std::move(id)}; }
  bool is_team() const { return !coder_id.has_value(); }

  bool operator==(const MetricScope&) const = default;
};

struct CodeCertainty {
  std::optional<double> certainty;  // empty when the code was never primary
  std::size_t n_primary_uses = 0;
  std::size_t n_same_secondary = 0;

  bool operator==(const CodeCertainty&) const = default;
};

struct CertaintyReport {
  MetricScope scope;
  std::vector<std::string> code_ids;  // codebook order
  std::vector<CodeCertainty> per_code;

  const CodeCertainty& Get(std::string_view code_id) const;

  bool operator==(const CertaintyReport&) const = default;
};

/// Share of each code's primary uses that repeat the code as secondary.
/// Team scope pools every coder's assignments. Requires a double-coding
/// round; throws MetricError("certainty requires double coding") otherwise.
CertaintyReport Certainty(const Round& round, const Codebook& codebook,
                          const MetricScope& scope);

/// Row p, column s: share of assignments with primary p whose secondary is s.
/// Rows are not expected to mirror columns.
struct PrimarySecondaryMatrix {
  MetricScope scope;
  std::vector<std::string> code_ids;
  std::vector<std::size_t> row_counts;  // primary uses per code
  std::vector<std::size_t> counts;      // k*k, row-major

  std::size_t size() const { return code_ids.size(); }
  std::size_t count(std::size_t primary, std::size_t secondary) const {
    return counts[primary * size() + secondary];
  }
  /// Empty for rows whose primary code was never used.
  std::optional<double> cell(std::size_t primary, std::size_t secondary) const;

  bool operator==(const PrimarySecondaryMatrix&) const = default;
};

PrimarySecondaryMatrix PrimarySecondary(const Round& round,
                                        const Codebook& codebook,
                                        const MetricScope& scope);

/// Pairwise code co-use counts. For a unit, the degree of {X, Y} is the
/// smaller of the two codes' primary counts on that unit; the degree of
/// {X, X} is X's count. Sums run over all units.
struct ConnectionDegreeTable {
  std::vector<std::string> code_ids;
  std::vector<std::string> unit_ids;
  std::vector<std::vector<int>> per_unit;  // per unit, k*k symmetric
  std::vector<int> sums;                   // k*k symmetric

  std::size_t size() const { return code_ids.size(); }
  int degree(std::size_t unit, std::size_t x, std::size_t y) const {
    return per_unit[unit][x * size() + y];
  }
  int sum(std::size_t x, std::size_t y) const { return sums[x * size() + y]; }

  bool operator==(const ConnectionDegreeTable&) const = default;
};

ConnectionDegreeTable ConnectionDegrees(const Round& round,
                                        const Codebook& codebook);

/// r(X, Y) = S(X, Y) / sqrt(S(X, X) * S(Y, Y)), zero when either code is
/// unused. Only the strict lower triangle is stored.
class CorrelatedDisagreementMatrix {
 public:
  CorrelatedDisagreementMatrix() = default;
  CorrelatedDisagreementMatrix(std::vector<std::string> code_ids,
                               std::vector<double> lower,
                               std::vector<bool> used);

  const std::vector<std::string>& code_ids() const { return code_ids_; }
  std::size_t size() const { return code_ids_.size(); }
  /// Symmetric access; the diagonal is 1 for used codes and 0 otherwise.
  double at(std::size_t x, std::size_t y) const;
  bool used(std::size_t x) const { return used_[x]; }
  /// Packed strict lower triangle: (1,0), (2,0), (2,1), (3,0), ...
  const std::vector<double>& lower() const { return lower_; }

  static std::size_t PackedIndex(std::size_t x, std::size_t y);

  bool operator==(const CorrelatedDisagreementMatrix&) const = default;

 private:
  std::vector<std::string> code_ids_;
  std::vector<double> lower_;
  std::vector<bool> used_;
};

CorrelatedDisagreementMatrix CorrelatedDisagreement(
    const ConnectionDegreeTable& table);

struct RoundDelta {
  std::optional<double> kappa_before;
  std::optional<double> kappa_after;
  std::string kappa_before_error;
  std::string kappa_after_error;
  std::vector<std::string> code_ids;
  std::vector<double> cdm_delta;  // after - before, packed lower triangle
  std::vector<std::pair<std::string, std::string>> newly_zero_pairs;
  std::vector<std::pair<std::string, std::string>> newly_nonzero_pairs;

  std::optional<double> kappa_delta() const;
  std::size_t pairs_changed() const {
    return newly_zero_pairs.size() + newly_nonzero_pairs.size();
  }

  bool operator==(const RoundDelta&) const = default;
};

/// Compares two rounds coded against the same codebook and units. Throws
/// RejectionError listing the differing code ids (or units) otherwise.
RoundDelta ComputeRoundDelta(const Round& before, const Codebook& before_codes,
                             const Round& after, const Codebook& after_codes);

enum class Shade { kNone, kLight, kMedium, kDark };

std::string_view ToString(Shade shade);

/// Lower bounds of the medium and light bands; below `medium` is dark.
struct ShadeThresholds {
  double medium = 0.34;
  double light = 0.67;

  bool operator==(const ShadeThresholds&) const = default;
};

/// Maps per-unit agreement onto a red shade; throws MetricError when p_i is
/// outside [0, 1] or the thresholds are not ordered.
Shade DisagreementShade(double p_i, const ShadeThresholds& thresholds = {});

/// Half-away-from-zero rounding used by every presentation layer.
double RoundForDisplay(double value, int decimals);

}  // namespace codewizard

#endif  // CODEWIZARD_METRICS_HPP
