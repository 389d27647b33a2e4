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

#include "codewizard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

namespace codewizard {

namespace {

// Codebook index of a token; metrics refuse codes outside the codebook.
std::size_t CodeIndex(const Codebook& codebook, const std::string& token) {
  auto idx = codebook.IndexOf(token);
  if (!idx) throw MetricError("code '" + token + "' is not in the codebook");
  return *idx;
}

std::vector<std::size_t> ScopeColumns(const Round& round,
                                      const MetricScope& scope) {
  const auto& m = round.assignments;
  if (scope.is_team()) {
    std::vector<std::size_t> all(m.num_coders());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    return all;
  }
  auto c = m.CoderIndex(*scope.coder_id);
  if (!c) {
    throw MetricError("coder '" + *scope.coder_id + "' is not in round " +
                      std::to_string(round.index));
  }
  return {*c};
}

void RequireDouble(const Round& round) {
  if (round.mode != RoundMode::kDouble) {
    throw MetricError("certainty requires double coding");
  }
}

}  // namespace

UnitAgreement PerUnitAgreement(const Round& round, std::string_view unit_id) {
  const auto& m = round.assignments;
  auto u = m.UnitIndex(unit_id);
  if (!u) throw MetricError("unknown unit '" + std::string(unit_id) + "'");

  std::map<std::string, std::int64_t> counts;
  std::int64_t n = 0;
  for (std::size_t c = 0; c < m.num_coders(); ++c) {
    if (const auto& cell = m.at(*u, c)) {
      ++counts[cell->primary];
      ++n;
    }
  }
  if (n < 2) {
    throw MetricError("insufficient coders for unit '" + std::string(unit_id) +
                      "'");
  }
  std::int64_t agreeing = 0;
  for (const auto& [code, k] : counts) agreeing += k * (k - 1);
  return UnitAgreement{std::string(unit_id),
                       static_cast<double>(agreeing) /
                           static_cast<double>(n * (n - 1)),
                       static_cast<std::size_t>(n)};
}

KappaResult FleissKappa(const Round& round) {
  const auto& m = round.assignments;
  const auto n = static_cast<std::int64_t>(m.num_coders());
  if (n < 2) throw MetricError("kappa requires at least 2 coders");

  KappaResult result;
  result.n_coders = m.num_coders();

  std::map<std::string, std::int64_t> totals;
  double p_sum = 0.0;
  std::int64_t included = 0;
  for (std::size_t u = 0; u < m.num_units(); ++u) {
    std::map<std::string, std::int64_t> counts;
    bool complete = true;
    for (std::size_t c = 0; c < m.num_coders(); ++c) {
      const auto& cell = m.at(u, c);
      if (!cell) {
        complete = false;
        break;
      }
      ++counts[cell->primary];
    }
    if (!complete) {
      result.excluded_units.push_back(m.unit_ids()[u]);
      continue;
    }
    std::int64_t agreeing = 0;
    for (const auto& [code, k] : counts) {
      agreeing += k * (k - 1);
      totals[code] += k;
    }
    p_sum += static_cast<double>(agreeing) / static_cast<double>(n * (n - 1));
    ++included;
  }
  if (included == 0) throw MetricError("kappa undefined: no complete units");

  const std::int64_t ratings = included * n;
  std::int64_t square_sum = 0;
  double p_e = 0.0;
  for (const auto& [code, k] : totals) {
    square_sum += k * k;
    const double p = static_cast<double>(k) / static_cast<double>(ratings);
    p_e += p * p;
  }
  if (square_sum == ratings * ratings) {
    throw MetricError("kappa undefined: no category variance");
  }

  result.n_units_included = static_cast<std::size_t>(included);
  result.p_bar = p_sum / static_cast<double>(included);
  result.p_e = p_e;
  result.kappa = (result.p_bar - p_e) / (1.0 - p_e);
  return result;
}

const CodeCertainty& CertaintyReport::Get(std::string_view code_id) const {
  for (std::size_t i = 0; i < code_ids.size(); ++i) {
    if (code_ids[i] == code_id) return per_code[i];
  }
  throw MetricError("no certainty entry for code '" + std::string(code_id) +
                    "'");
}

CertaintyReport Certainty(const Round& round, const Codebook& codebook,
                          const MetricScope& scope) {
  // Same counts as the diagonal of the primary/secondary matrix.
  PrimarySecondaryMatrix ps = PrimarySecondary(round, codebook, scope);
  CertaintyReport report;
  report.scope = scope;
  report.code_ids = ps.code_ids;
  report.per_code.resize(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& entry = report.per_code[i];
    entry.n_primary_uses = ps.row_counts[i];
    entry.n_same_secondary = ps.count(i, i);
    entry.certainty = ps.cell(i, i);
  }
  return report;
}

std::optional<double> PrimarySecondaryMatrix::cell(std::size_t primary,
                                                   std::size_t secondary) const {
  if (row_counts[primary] == 0) return std::nullopt;
  return static_cast<double>(count(primary, secondary)) /
         static_cast<double>(row_counts[primary]);
}

PrimarySecondaryMatrix PrimarySecondary(const Round& round,
                                        const Codebook& codebook,
                                        const MetricScope& scope) {
  RequireDouble(round);
  const auto& m = round.assignments;
  const std::size_t k = codebook.size();

  PrimarySecondaryMatrix ps;
  ps.scope = scope;
  ps.code_ids = codebook.Ids();
  ps.row_counts.assign(k, 0);
  ps.counts.assign(k * k, 0);

  for (std::size_t c : ScopeColumns(round, scope)) {
    for (std::size_t u = 0; u < m.num_units(); ++u) {
      const auto& cell = m.at(u, c);
      if (!cell) continue;
      if (!cell->secondary) {
        throw MetricError("missing secondary code at " + m.unit_ids()[u] +
                          " / " + m.coder_ids()[c]);
      }
      const std::size_t p = CodeIndex(codebook, cell->primary);
      const std::size_t s = CodeIndex(codebook, *cell->secondary);
      ++ps.row_counts[p];
      ++ps.counts[p * k + s];
    }
  }
  return ps;
}

ConnectionDegreeTable ConnectionDegrees(const Round& round,
                                        const Codebook& codebook) {
  const auto& m = round.assignments;
  const std::size_t k = codebook.size();

  ConnectionDegreeTable table;
  table.code_ids = codebook.Ids();
  table.unit_ids = m.unit_ids();
  table.sums.assign(k * k, 0);
  table.per_unit.reserve(m.num_units());

  std::vector<int> counts(k);
  for (std::size_t u = 0; u < m.num_units(); ++u) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t c = 0; c < m.num_coders(); ++c) {
      if (const auto& cell = m.at(u, c)) ++counts[CodeIndex(codebook, cell->primary)];
    }
    std::vector<int> degrees(k * k, 0);
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t y = 0; y < k; ++y) {
        degrees[x * k + y] = std::min(counts[x], counts[y]);
        table.sums[x * k + y] += degrees[x * k + y];
      }
    }
    table.per_unit.push_back(std::move(degrees));
  }
  return table;
}

CorrelatedDisagreementMatrix::CorrelatedDisagreementMatrix(
    std::vector<std::string> code_ids, std::vector<double> lower,
    std::vector<bool> used)
    : code_ids_(std::move(code_ids)),
      lower_(std::move(lower)),
      used_(std::move(used)) {}

std::size_t CorrelatedDisagreementMatrix::PackedIndex(std::size_t x,
                                                      std::size_t y) {
  if (x < y) std::swap(x, y);
  return x * (x - 1) / 2 + y;
}

double CorrelatedDisagreementMatrix::at(std::size_t x, std::size_t y) const {
  if (x == y) return used_[x] ? 1.0 : 0.0;
  return lower_[PackedIndex(x, y)];
}

CorrelatedDisagreementMatrix CorrelatedDisagreement(
    const ConnectionDegreeTable& table) {
  const std::size_t k = table.size();
  std::vector<double> lower(k == 0 ? 0 : k * (k - 1) / 2, 0.0);
  std::vector<bool> used(k);
  for (std::size_t x = 0; x < k; ++x) used[x] = table.sum(x, x) > 0;
  for (std::size_t x = 1; x < k; ++x) {
    for (std::size_t y = 0; y < x; ++y) {
      if (!used[x] || !used[y]) continue;
      const double denom = std::sqrt(static_cast<double>(table.sum(x, x)) *
                                     static_cast<double>(table.sum(y, y)));
      lower[CorrelatedDisagreementMatrix::PackedIndex(x, y)] =
          static_cast<double>(table.sum(x, y)) / denom;
    }
  }
  return CorrelatedDisagreementMatrix(table.code_ids, std::move(lower),
                                      std::move(used));
}

std::optional<double> RoundDelta::kappa_delta() const {
  if (!kappa_before || !kappa_after) return std::nullopt;
  return *kappa_after - *kappa_before;
}

RoundDelta ComputeRoundDelta(const Round& before, const Codebook& before_codes,
                             const Round& after, const Codebook& after_codes) {
  const auto before_ids = before_codes.Ids();
  const auto after_ids = after_codes.Ids();
  if (before_ids != after_ids) {
    std::set<std::string> a(before_ids.begin(), before_ids.end());
    std::set<std::string> b(after_ids.begin(), after_ids.end());
    std::vector<std::string> diff;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(diff));
    std::string listed;
    for (const auto& id : diff) listed += (listed.empty() ? "" : ", ") + id;
    throw RejectionError(diff.empty()
                             ? "codebooks list the same codes in a different order"
                             : "codebooks differ in codes: " + listed);
  }
  if (before.assignments.unit_ids() != after.assignments.unit_ids()) {
    throw RejectionError("rounds cover different units");
  }

  RoundDelta delta;
  delta.code_ids = before_ids;
  try {
    delta.kappa_before = FleissKappa(before).kappa;
  } catch (const MetricError& e) {
    delta.kappa_before_error = e.what();
  }
  try {
    delta.kappa_after = FleissKappa(after).kappa;
  } catch (const MetricError& e) {
    delta.kappa_after_error = e.what();
  }

  const auto cdm_before =
      CorrelatedDisagreement(ConnectionDegrees(before, before_codes));
  const auto cdm_after =
      CorrelatedDisagreement(ConnectionDegrees(after, after_codes));
  const std::size_t k = before_ids.size();
  delta.cdm_delta.assign(cdm_before.lower().size(), 0.0);
  for (std::size_t x = 1; x < k; ++x) {
    for (std::size_t y = 0; y < x; ++y) {
      const double r0 = cdm_before.at(x, y);
      const double r1 = cdm_after.at(x, y);
      delta.cdm_delta[CorrelatedDisagreementMatrix::PackedIndex(x, y)] = r1 - r0;
      if (r0 > 0.0 && r1 == 0.0) {
        delta.newly_zero_pairs.emplace_back(before_ids[y], before_ids[x]);
      } else if (r0 == 0.0 && r1 > 0.0) {
        delta.newly_nonzero_pairs.emplace_back(before_ids[y], before_ids[x]);
      }
    }
  }
  return delta;
}

std::string_view ToString(Shade shade) {
  switch (shade) {
    case Shade::kNone:
      return "none";
    case Shade::kLight:
      return "light";
    case Shade::kMedium:
      return "medium";
    case Shade::kDark:
      return "dark";
  }
  return "none";
}

Shade DisagreementShade(double p_i, const ShadeThresholds& thresholds) {
  if (!(p_i >= 0.0 && p_i <= 1.0)) {
    throw MetricError("agreement " + std::to_string(p_i) +
                      " is outside [0, 1]");
  }
  if (!(0.0 <= thresholds.medium && thresholds.medium <= thresholds.light &&
        thresholds.light <= 1.0)) {
    throw MetricError("shade thresholds must satisfy 0 <= medium <= light <= 1");
  }
  if (p_i >= 1.0) return Shade::kNone;
  if (p_i >= thresholds.light) return Shade::kLight;
  if (p_i >= thresholds.medium) return Shade::kMedium;
  return Shade::kDark;
}

double RoundForDisplay(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace codewizard
