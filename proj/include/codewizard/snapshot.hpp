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

// Everything computed for one round at one project revision, plus its JSON
// form. The JSON layout is shared by the metric export files and the
// session service.

#ifndef CODEWIZARD_SNAPSHOT_HPP
#define CODEWIZARD_SNAPSHOT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codewizard/metrics.hpp"
#include "codewizard/model.hpp"
#include "json.hpp"

namespace codewizard {

inline constexpr int kSchemaVersion = 1;

/// A metric value, or the reason it could not be computed.
template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string reason;

  bool ok() const { return value.has_value(); }
  bool operator==(const Outcome&) const = default;
};

struct UnitAgreementRow {
  std::string unit_id;
  std::size_t n_coders = 0;
  std::optional<double> p_i;
  std::optional<Shade> shade;
  std::string reason;  // set when p_i is empty

  bool operator==(const UnitAgreementRow&) const = default;
};

struct MetricsSnapshot {
  std::uint64_t revision = 0;
  int round_index = 0;
  RoundMode mode = RoundMode::kSingle;
  Outcome<KappaResult> kappa;
  std::vector<UnitAgreementRow> agreements;
  /// Team report first, then one per coder in column order.
  Outcome<std::vector<CertaintyReport>> certainty;
  Outcome<std::vector<PrimarySecondaryMatrix>> ps_matrices;
  Outcome<ConnectionDegreeTable> connection_degrees;
  Outcome<CorrelatedDisagreementMatrix> cdm;
  std::string computed_at;  // ISO-8601 UTC; excluded from SameContent

  bool operator==(const MetricsSnapshot&) const = default;
};

/// Throws RejectionError when the round does not exist.
MetricsSnapshot ComputeSnapshot(const Project& project, int round_index,
                                const ShadeThresholds& thresholds = {});

/// Equality ignoring `computed_at`.
bool SameContent(const MetricsSnapshot& a, const MetricsSnapshot& b);

std::string UtcTimestamp();

// JSON. Family objects are what the export files and the service embed.
nlohmann::json KappaJson(const MetricsSnapshot& s);
nlohmann::json AgreementJson(const MetricsSnapshot& s);
nlohmann::json CertaintyJson(const MetricsSnapshot& s);
nlohmann::json PsMatrixJson(const MetricsSnapshot& s);
nlohmann::json ConnectionDegreesJson(const MetricsSnapshot& s);
nlohmann::json CdmJson(const MetricsSnapshot& s);
nlohmann::json RoundDeltaJson(const RoundDelta& delta);

nlohmann::json ToJson(const MetricsSnapshot& s);

/// Codebook with colors, units, roster, rounds with their grids, revision.
nlohmann::json ProjectJson(const Project& project);

/// Inverse of ToJson. Display-rounded fields are ignored. Throws
/// StorageError on schema mismatch.
MetricsSnapshot SnapshotFromJson(const nlohmann::json& j);
RoundDelta RoundDeltaFromJson(const nlohmann::json& j);

}  // namespace codewizard

#endif  // CODEWIZARD_SNAPSHOT_HPP
