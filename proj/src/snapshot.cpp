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

#include "codewizard/snapshot.hpp"

#include <chrono>
#include <ctime>

namespace codewizard {

using nlohmann::json;

namespace {

constexpr int kKappaDecimals = 3;
constexpr int kAgreementDecimals = 2;
constexpr int kCdmDecimals = 2;

constexpr const char* kSingleModeReason = "certainty requires double coding";

json Nullable(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json NullableDisplay(const std::optional<double>& v, int decimals,
                     double scale = 1.0) {
  return v ? json(RoundForDisplay(*v * scale, decimals)) : json(nullptr);
}

std::optional<double> OptionalDouble(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json ScopeJson(const MetricScope& scope) {
  if (scope.is_team()) return json{{"kind", "team"}};
  return json{{"kind", "coder"}, {"coder_id", *scope.coder_id}};
}

MetricScope ScopeFromJson(const json& j) {
  if (j.at("kind").get<std::string>() == "team") return MetricScope::Team();
  return MetricScope::Coder(j.at("coder_id").get<std::string>());
}

template <typename T>
json Header(const Outcome<T>& outcome) {
  json j{{"available", outcome.ok()}};
  if (!outcome.ok()) j["reason"] = outcome.reason;
  return j;
}

template <typename T>
Outcome<T> Unavailable(const json& j) {
  Outcome<T> out;
  out.reason = j.value("reason", std::string());
  return out;
}

std::optional<Shade> ParseShade(const std::string& s) {
  for (Shade shade : {Shade::kNone, Shade::kLight, Shade::kMedium, Shade::kDark}) {
    if (ToString(shade) == s) return shade;
  }
  return std::nullopt;
}

json SquareJson(const std::vector<int>& flat, std::size_t k) {
  json rows = json::array();
  for (std::size_t x = 0; x < k; ++x) {
    rows.push_back(std::vector<int>(flat.begin() + static_cast<long>(x * k),
                                    flat.begin() + static_cast<long>((x + 1) * k)));
  }
  return rows;
}

std::vector<int> SquareFromJson(const json& rows) {
  std::vector<int> flat;
  for (const auto& row : rows) {
    for (const auto& v : row) flat.push_back(v.get<int>());
  }
  return flat;
}

}  // namespace

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MetricsSnapshot ComputeSnapshot(const Project& project, int round_index,
                                const ShadeThresholds& thresholds) {
  const Round* round = project.FindRound(round_index);
  if (round == nullptr) {
    throw RejectionError("no such round " + std::to_string(round_index));
  }
  MetricsSnapshot s;
  s.revision = project.revision;
  s.round_index = round_index;
  s.mode = round->mode;

  try {
    s.kappa.value = FleissKappa(*round);
  } catch (const MetricError& e) {
    s.kappa.reason = e.what();
  }

  const auto& m = round->assignments;
  for (const auto& unit_id : m.unit_ids()) {
    UnitAgreementRow row;
    row.unit_id = unit_id;
    try {
      UnitAgreement a = PerUnitAgreement(*round, unit_id);
      row.n_coders = a.n_coders;
      row.p_i = a.p_i;
      row.shade = DisagreementShade(a.p_i, thresholds);
    } catch (const MetricError& e) {
      row.reason = e.what();
    }
    s.agreements.push_back(std::move(row));
  }

  if (round->mode == RoundMode::kDouble) {
    try {
      std::vector<CertaintyReport> reports;
      std::vector<PrimarySecondaryMatrix> matrices;
      std::vector<MetricScope> scopes{MetricScope::Team()};
      for (const auto& coder : m.coder_ids()) {
        scopes.push_back(MetricScope::Coder(coder));
      }
      for (const auto& scope : scopes) {
        matrices.push_back(PrimarySecondary(*round, project.codebook, scope));
        reports.push_back(Certainty(*round, project.codebook, scope));
      }
      s.certainty.value = std::move(reports);
      s.ps_matrices.value = std::move(matrices);
    } catch (const MetricError& e) {
      s.certainty.reason = e.what();
      s.ps_matrices.reason = e.what();
    }
  } else {
    s.certainty.reason = kSingleModeReason;
    s.ps_matrices.reason = kSingleModeReason;
  }

  try {
    s.connection_degrees.value = ConnectionDegrees(*round, project.codebook);
    s.cdm.value = CorrelatedDisagreement(*s.connection_degrees.value);
  } catch (const MetricError& e) {
    s.connection_degrees.reason = e.what();
    s.cdm.reason = e.what();
  }

  s.computed_at = UtcTimestamp();
  return s;
}

bool SameContent(const MetricsSnapshot& a, const MetricsSnapshot& b) {
  MetricsSnapshot x = a;
  x.computed_at = b.computed_at;
  return x == b;
}

json KappaJson(const MetricsSnapshot& s) {
  json j = Header(s.kappa);
  if (const auto& k = s.kappa.value) {
    j["kappa"] = k->kappa;
    j["p_bar"] = k->p_bar;
    j["p_e"] = k->p_e;
    j["n_coders"] = k->n_coders;
    j["n_units_included"] = k->n_units_included;
    j["excluded_units"] = k->excluded_units;
    j["display"] = {{"kappa", RoundForDisplay(k->kappa, kKappaDecimals)}};
  }
  return j;
}

json AgreementJson(const MetricsSnapshot& s) {
  json units = json::array();
  for (const auto& row : s.agreements) {
    json u{{"unit_id", row.unit_id},
           {"n_coders", row.n_coders},
           {"p_i", Nullable(row.p_i)},
           {"p_i_display", NullableDisplay(row.p_i, kAgreementDecimals)},
           {"shade", row.shade ? json(ToString(*row.shade)) : json(nullptr)}};
    if (!row.p_i) u["reason"] = row.reason;
    units.push_back(std::move(u));
  }
  return json{{"units", std::move(units)}};
}

json CertaintyJson(const MetricsSnapshot& s) {
  json j = Header(s.certainty);
  if (!s.certainty.ok()) return j;
  json reports = json::array();
  for (const auto& report : *s.certainty.value) {
    json codes = json::array();
    for (std::size_t i = 0; i < report.code_ids.size(); ++i) {
      const auto& c = report.per_code[i];
      codes.push_back({{"code", report.code_ids[i]},
                       {"n_primary_uses", c.n_primary_uses},
                       {"n_same_secondary", c.n_same_secondary},
                       {"certainty", Nullable(c.certainty)},
                       {"certainty_display_percent",
                        NullableDisplay(c.certainty, 0, 100.0)}});
    }
    reports.push_back({{"scope", ScopeJson(report.scope)}, {"codes", codes}});
  }
  j["reports"] = std::move(reports);
  return j;
}

json PsMatrixJson(const MetricsSnapshot& s) {
  json j = Header(s.ps_matrices);
  if (!s.ps_matrices.ok()) return j;
  json matrices = json::array();
  for (const auto& ps : *s.ps_matrices.value) {
    const std::size_t k = ps.size();
    json counts = json::array();
    json cells = json::array();
    json display = json::array();
    for (std::size_t p = 0; p < k; ++p) {
      json count_row = json::array();
      json cell_row = json::array();
      json display_row = json::array();
      for (std::size_t q = 0; q < k; ++q) {
        count_row.push_back(ps.count(p, q));
        cell_row.push_back(Nullable(ps.cell(p, q)));
        display_row.push_back(NullableDisplay(ps.cell(p, q), 0, 100.0));
      }
      counts.push_back(std::move(count_row));
      cells.push_back(std::move(cell_row));
      display.push_back(std::move(display_row));
    }
    matrices.push_back({{"scope", ScopeJson(ps.scope)},
                        {"codes", ps.code_ids},
                        {"row_counts", ps.row_counts},
                        {"counts", std::move(counts)},
                        {"cells", std::move(cells)},
                        {"display_percent", std::move(display)}});
  }
  j["matrices"] = std::move(matrices);
  return j;
}

json ConnectionDegreesJson(const MetricsSnapshot& s) {
  json j = Header(s.connection_degrees);
  if (const auto& t = s.connection_degrees.value) {
    json per_unit = json::array();
    for (const auto& degrees : t->per_unit) {
      per_unit.push_back(SquareJson(degrees, t->size()));
    }
    j["codes"] = t->code_ids;
    j["units"] = t->unit_ids;
    j["per_unit"] = std::move(per_unit);
    j["sums"] = SquareJson(t->sums, t->size());
  }
  return j;
}

json CdmJson(const MetricsSnapshot& s) {
  json j = Header(s.cdm);
  if (const auto& cdm = s.cdm.value) {
    json lower = json::array();
    json display = json::array();
    std::vector<bool> used;
    for (std::size_t x = 0; x < cdm->size(); ++x) {
      used.push_back(cdm->used(x));
      json row = json::array();
      json display_row = json::array();
      for (std::size_t y = 0; y < x; ++y) {
        row.push_back(cdm->at(x, y));
        display_row.push_back(RoundForDisplay(cdm->at(x, y), kCdmDecimals));
      }
      lower.push_back(std::move(row));
      display.push_back(std::move(display_row));
    }
    j["codes"] = cdm->code_ids();
    j["used"] = used;
    j["lower"] = std::move(lower);
    j["display"] = std::move(display);
  }
  return j;
}

json RoundDeltaJson(const RoundDelta& d) {
  json lower = json::array();
  const std::size_t k = d.code_ids.size();
  for (std::size_t x = 0; x < k; ++x) {
    json row = json::array();
    for (std::size_t y = 0; y < x; ++y) {
      row.push_back(d.cdm_delta[CorrelatedDisagreementMatrix::PackedIndex(x, y)]);
    }
    lower.push_back(std::move(row));
  }
  auto pairs = [](const auto& list) {
    json out = json::array();
    for (const auto& [a, b] : list) out.push_back(json::array({a, b}));
    return out;
  };
  json j{{"schema_version", kSchemaVersion},
         {"kappa_before", Nullable(d.kappa_before)},
         {"kappa_after", Nullable(d.kappa_after)},
         {"kappa_delta", Nullable(d.kappa_delta())},
         {"codes", d.code_ids},
         {"cdm_delta", std::move(lower)},
         {"newly_zero_pairs", pairs(d.newly_zero_pairs)},
         {"newly_nonzero_pairs", pairs(d.newly_nonzero_pairs)}};
  if (!d.kappa_before) j["kappa_before_reason"] = d.kappa_before_error;
  if (!d.kappa_after) j["kappa_after_reason"] = d.kappa_after_error;
  return j;
}

json ToJson(const MetricsSnapshot& s) {
  return json{{"schema_version", kSchemaVersion},
              {"revision", s.revision},
              {"round", s.round_index},
              {"mode", ToString(s.mode)},
              {"computed_at", s.computed_at},
              {"kappa", KappaJson(s)},
              {"per_unit_agreement", AgreementJson(s)},
              {"certainty", CertaintyJson(s)},
              {"ps_matrix", PsMatrixJson(s)},
              {"connection_degrees", ConnectionDegreesJson(s)},
              {"cdm", CdmJson(s)}};
}

json ProjectJson(const Project& project) {
  json codes = json::array();
  for (const auto& c : project.codebook.codes) {
    codes.push_back({{"id", c.id},
                     {"label", c.label},
                     {"definition", c.definition},
                     {"color", c.color}});
  }
  json units = json::array();
  for (const auto& u : project.units) {
    units.push_back({{"id", u.id},
                     {"timestamp", u.timestamp},
                     {"text", u.text},
                     {"source_link", u.source_link}});
  }
  json rounds = json::array();
  for (const auto& r : project.rounds) {
    const auto& m = r.assignments;
    json grid = json::array();
    for (std::size_t u = 0; u < m.num_units(); ++u) {
      json row = json::array();
      for (std::size_t c = 0; c < m.num_coders(); ++c) {
        const auto& cell = m.at(u, c);
        if (!cell) {
          row.push_back(nullptr);
          continue;
        }
        row.push_back({{"primary", cell->primary},
                       {"secondary", cell->secondary ? json(*cell->secondary)
                                                     : json(nullptr)}});
      }
      grid.push_back(std::move(row));
    }
    rounds.push_back({{"index", r.index},
                      {"mode", ToString(r.mode)},
                      {"note", r.note},
                      {"units", m.unit_ids()},
                      {"coders", m.coder_ids()},
                      {"assignments", std::move(grid)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"revision", project.revision},
              {"name", project.name},
              {"codebook",
               {{"instructions", project.codebook.instructions},
                {"codes", std::move(codes)}}},
              {"units", std::move(units)},
              {"coders", project.coders},
              {"rounds", std::move(rounds)}};
}

MetricsSnapshot SnapshotFromJson(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw StorageError("unsupported metrics schema version " +
                         j.at("schema_version").dump());
    }
    MetricsSnapshot s;
    s.revision = j.at("revision").get<std::uint64_t>();
    s.round_index = j.at("round").get<int>();
    auto mode = ParseRoundMode(j.at("mode").get<std::string>());
    if (!mode) throw StorageError("bad round mode in metrics");
    s.mode = *mode;
    s.computed_at = j.at("computed_at").get<std::string>();

    const json& kj = j.at("kappa");
    if (kj.at("available").get<bool>()) {
      KappaResult k;
      k.kappa = kj.at("kappa").get<double>();
      k.p_bar = kj.at("p_bar").get<double>();
      k.p_e = kj.at("p_e").get<double>();
      k.n_coders = kj.at("n_coders").get<std::size_t>();
      k.n_units_included = kj.at("n_units_included").get<std::size_t>();
      k.excluded_units = kj.at("excluded_units").get<std::vector<std::string>>();
      s.kappa.value = std::move(k);
    } else {
      s.kappa = Unavailable<KappaResult>(kj);
    }

    for (const auto& u : j.at("per_unit_agreement").at("units")) {
      UnitAgreementRow row;
      row.unit_id = u.at("unit_id").get<std::string>();
      row.n_coders = u.at("n_coders").get<std::size_t>();
      row.p_i = OptionalDouble(u.at("p_i"));
      if (!u.at("shade").is_null()) {
        row.shade = ParseShade(u.at("shade").get<std::string>());
      }
      if (!row.p_i) row.reason = u.value("reason", std::string());
      s.agreements.push_back(std::move(row));
    }

    const json& cj = j.at("certainty");
    if (cj.at("available").get<bool>()) {
      std::vector<CertaintyReport> reports;
      for (const auto& r : cj.at("reports")) {
        CertaintyReport report;
        report.scope = ScopeFromJson(r.at("scope"));
        for (const auto& c : r.at("codes")) {
          report.code_ids.push_back(c.at("code").get<std::string>());
          report.per_code.push_back(
              CodeCertainty{OptionalDouble(c.at("certainty")),
                            c.at("n_primary_uses").get<std::size_t>(),
                            c.at("n_same_secondary").get<std::size_t>()});
        }
        reports.push_back(std::move(report));
      }
      s.certainty.value = std::move(reports);
    } else {
      s.certainty = Unavailable<std::vector<CertaintyReport>>(cj);
    }

    const json& pj = j.at("ps_matrix");
    if (pj.at("available").get<bool>()) {
      std::vector<PrimarySecondaryMatrix> matrices;
      for (const auto& mj : pj.at("matrices")) {
        PrimarySecondaryMatrix ps;
        ps.scope = ScopeFromJson(mj.at("scope"));
        ps.code_ids = mj.at("codes").get<std::vector<std::string>>();
        ps.row_counts = mj.at("row_counts").get<std::vector<std::size_t>>();
        for (const auto& row : mj.at("counts")) {
          for (const auto& v : row) ps.counts.push_back(v.get<std::size_t>());
        }
        matrices.push_back(std::move(ps));
      }
      s.ps_matrices.value = std::move(matrices);
    } else {
      s.ps_matrices = Unavailable<std::vector<PrimarySecondaryMatrix>>(pj);
    }

    const json& dj = j.at("connection_degrees");
    if (dj.at("available").get<bool>()) {
      ConnectionDegreeTable t;
      t.code_ids = dj.at("codes").get<std::vector<std::string>>();
      t.unit_ids = dj.at("units").get<std::vector<std::string>>();
      for (const auto& unit : dj.at("per_unit")) {
        t.per_unit.push_back(SquareFromJson(unit));
      }
      t.sums = SquareFromJson(dj.at("sums"));
      s.connection_degrees.value = std::move(t);
    } else {
      s.connection_degrees = Unavailable<ConnectionDegreeTable>(dj);
    }

    const json& rj = j.at("cdm");
    if (rj.at("available").get<bool>()) {
      std::vector<double> lower;
      for (const auto& row : rj.at("lower")) {
        for (const auto& v : row) lower.push_back(v.get<double>());
      }
      s.cdm.value = CorrelatedDisagreementMatrix(
          rj.at("codes").get<std::vector<std::string>>(), std::move(lower),
          rj.at("used").get<std::vector<bool>>());
    } else {
      s.cdm = Unavailable<CorrelatedDisagreementMatrix>(rj);
    }
    return s;
  } catch (const json::exception& e) {
    throw StorageError(std::string("malformed metrics JSON: ") + e.what());
  }
}

RoundDelta RoundDeltaFromJson(const json& j) {
  try {
    RoundDelta d;
    d.kappa_before = OptionalDouble(j.at("kappa_before"));
    d.kappa_after = OptionalDouble(j.at("kappa_after"));
    d.kappa_before_error = j.value("kappa_before_reason", std::string());
    d.kappa_after_error = j.value("kappa_after_reason", std::string());
    d.code_ids = j.at("codes").get<std::vector<std::string>>();
    for (const auto& row : j.at("cdm_delta")) {
      for (const auto& v : row) d.cdm_delta.push_back(v.get<double>());
    }
    for (const auto& p : j.at("newly_zero_pairs")) {
      d.newly_zero_pairs.emplace_back(p.at(0).get<std::string>(),
                                      p.at(1).get<std::string>());
    }
    for (const auto& p : j.at("newly_nonzero_pairs")) {
      d.newly_nonzero_pairs.emplace_back(p.at(0).get<std::string>(),
                                         p.at(1).get<std::string>());
    }
    return d;
  } catch (const json::exception& e) {
    throw StorageError(std::string("malformed round delta JSON: ") + e.what());
  }
}

}  // namespace codewizard
