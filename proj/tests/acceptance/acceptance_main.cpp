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

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "codewizard/cli.hpp"
#include "codewizard/metrics.hpp"
#include "codewizard/storage.hpp"
#include "fixtures.hpp"
#include "http_harness.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

using namespace codewizard;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Collects the reasons a criterion failed.
struct Check {
  std::vector<std::string> failures;

  void That(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void Near(double actual, double expected, double tol, const std::string& what) {
    if (!(std::fabs(actual - expected) <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << what << ": got " << actual << ", want " << expected << " +/- " << tol;
      failures.push_back(os.str());
    }
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::size_t Idx(const Codebook& book, const std::string& id) { return *book.IndexOf(id); }

// --- Connection degrees -----------------------------------------------------

void ConnectionDegreeFixture(Check& check) {
  const auto start = Clock::now();
  const Codebook book = fixtures::FiveCodersCodebook();
  const auto t = ConnectionDegrees(fixtures::FiveCodersRound(), book);
  const std::map<std::pair<std::string, std::string>, int> sums = {
      {{"A", "A"}, 8}, {{"B", "B"}, 7}, {{"C", "C"}, 10},
      {{"A", "B"}, 5}, {{"A", "C"}, 2}, {{"B", "C"}, 1}};
  for (const auto& [pair, want] : sums) {
    const int got = t.sum(Idx(book, pair.first), Idx(book, pair.second));
    check.That(got == want, "S_" + pair.first + pair.second + " = " +
                                std::to_string(got) + ", want " + std::to_string(want));
  }
  // Every per-unit degree against the brute-force oracle.
  for (std::size_t u = 0; u < fixtures::kFiveCoders.size(); ++u) {
    for (const auto& x : book.Ids()) {
      for (const auto& y : book.Ids()) {
        check.That(t.degree(u, Idx(book, x), Idx(book, y)) ==
                       oracle::Degree(fixtures::kFiveCoders[u], x, y),
                   "degree mismatch at unit " + std::to_string(u + 1) + " " + x + y);
      }
    }
  }
  check.That(t.degree(0, Idx(book, "A"), Idx(book, "A")) == 1, "Unit 1 AA");
  check.That(t.degree(0, Idx(book, "C"), Idx(book, "C")) == 4, "Unit 1 CC");
  check.That(t.degree(0, Idx(book, "A"), Idx(book, "C")) == 1, "Unit 1 AC");
  check.That(Seconds(start) < 1.0, "runtime over 1 s");
}

// --- Correlated disagreement ------------------------------------------------

void CorrelatedDisagreementFixture(Check& check) {
  const Codebook book = fixtures::FiveCodersCodebook();
  const auto cdm = CorrelatedDisagreement(ConnectionDegrees(fixtures::FiveCodersRound(), book));
  const auto A = Idx(book, "A"), B = Idx(book, "B"), C = Idx(book, "C");
  check.Near(cdm.at(A, C), 0.2236, 1e-4, "r_AC");
  check.Near(cdm.at(A, B), 0.6682, 1e-4, "r_AB");
  check.Near(cdm.at(B, C), 0.1195, 1e-4, "r_BC");
  check.Near(cdm.at(A, C), oracle::R(fixtures::kFiveCoders, "A", "C"), 1e-15, "r_AC oracle");
  check.Near(cdm.at(A, B), oracle::R(fixtures::kFiveCoders, "A", "B"), 1e-15, "r_AB oracle");
  check.Near(cdm.at(B, C), oracle::R(fixtures::kFiveCoders, "B", "C"), 1e-15, "r_BC oracle");
  check.That(RoundForDisplay(cdm.at(A, C), 1) == 0.2, "r_AC displays as 0.2");
  check.That(RoundForDisplay(cdm.at(A, B), 1) == 0.7, "r_AB displays as 0.7");
  check.That(RoundForDisplay(cdm.at(B, C), 1) == 0.1, "r_BC displays as 0.1");
}

// --- Fleiss' kappa -----------------------------------------------------------

void FleissKappaFixture(Check& check) {
  const double kappa = FleissKappa(fixtures::FiveCodersRound()).kappa;
  check.Near(kappa, 0.3022, 5e-4, "kappa");
  check.Near(kappa, oracle::Kappa(fixtures::kFiveCoders), 1e-12, "kappa vs pair-counting oracle");
  check.That(RoundForDisplay(kappa, 1) == 0.3, "kappa displays as 0.3");
}

// --- Per-unit agreement --------------------------------------------------------

void PerUnitAgreementFixture(Check& check) {
  const Round round = fixtures::MakeRound({{"SB", "SB", "SB", "SB"}, {"CT", "SB", "SB", "CT"}});
  const double unanimous = PerUnitAgreement(round, "Unit 1").p_i;
  const double split = PerUnitAgreement(round, "Unit 2").p_i;
  check.That(RoundForDisplay(unanimous, 2) == 1.00, "unanimous row is not 1.00");
  check.That(RoundForDisplay(split, 2) == 0.33, "2+2 split row is not 0.33");
  check.Near(unanimous, oracle::UnitAgreement({"SB", "SB", "SB", "SB"}), 1e-15, "oracle 1.00");
  check.Near(split, oracle::UnitAgreement({"CT", "SB", "SB", "CT"}), 1e-15, "oracle 0.33");
}

// --- Substituted property suite ----------------------------------------------

using Rng = std::mt19937;

int Uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<std::string> Codes(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(std::string(1, char('A' + i)));
  return ids;
}

oracle::Grid RandomGrid(Rng& rng, std::size_t units, std::size_t coders,
                        const std::vector<std::string>& codes) {
  oracle::Grid g(units, std::vector<std::string>(coders));
  for (auto& row : g) {
    for (auto& cell : row) cell = codes[Uniform(rng, 0, int(codes.size()) - 1)];
  }
  return g;
}

void KappaInvariance(Check& check, Rng& rng) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto codes = Codes(Uniform(rng, 2, 5));
    const std::size_t units = Uniform(rng, 2, 10), coders = Uniform(rng, 2, 6);
    const auto grid = RandomGrid(rng, units, coders, codes);
    std::set<std::string> used;
    for (const auto& row : grid) used.insert(row.begin(), row.end());
    if (used.size() < 2) continue;
    const double base = FleissKappa(fixtures::MakeRound(grid)).kappa;
    check.Near(base, oracle::Kappa(grid), 1e-12, "kappa vs oracle");

    auto perm = codes;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < codes.size(); ++i) rename[codes[i]] = "r" + perm[i];
    std::vector<std::size_t> uo(units), co(coders);
    std::iota(uo.begin(), uo.end(), 0);
    std::iota(co.begin(), co.end(), 0);
    std::shuffle(uo.begin(), uo.end(), rng);
    std::shuffle(co.begin(), co.end(), rng);
    oracle::Grid moved(units, std::vector<std::string>(coders));
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t c = 0; c < coders; ++c) moved[u][c] = rename[grid[uo[u]][co[c]]];
    }
    check.Near(FleissKappa(fixtures::MakeRound(moved)).kappa, base, 1e-12,
               "kappa relabel/permutation invariance");
  }
}

void PsMatrixProperties(Check& check, Rng& rng) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto codes = Codes(Uniform(rng, 2, 7));
    const std::size_t units = Uniform(rng, 1, 12), coders = Uniform(rng, 1, 5);
    const auto primary = RandomGrid(rng, units, coders, codes);
    auto secondary = RandomGrid(rng, units, coders, codes);
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t c = 0; c < coders; ++c) {
        if (Uniform(rng, 0, 1)) secondary[u][c] = primary[u][c];
      }
    }
    const Round round = fixtures::MakeRound(primary, secondary);
    const Codebook book = fixtures::MakeCodebook(codes);
    std::vector<MetricScope> scopes{MetricScope::Team()};
    for (const auto& id : round.assignments.coder_ids()) scopes.push_back(MetricScope::Coder(id));
    for (const auto& scope : scopes) {
      const auto ps = PrimarySecondary(round, book, scope);
      const auto cert = Certainty(round, book, scope);
      for (std::size_t p = 0; p < ps.size(); ++p) {
        if (ps.row_counts[p] == 0) {
          check.That(!cert.Get(codes[p]).certainty, "unused code has a certainty");
          continue;
        }
        double sum = 0.0;
        for (std::size_t s = 0; s < ps.size(); ++s) sum += *ps.cell(p, s);
        check.Near(sum, 1.0, 1e-12, "PS row sum");
        check.That(*ps.cell(p, p) == *cert.Get(codes[p]).certainty,
                   "PS diagonal differs from certainty");
      }
    }
  }
}

void CdmProperties(Check& check, Rng& rng) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto codes = Codes(Uniform(rng, 2, 7));
    const std::size_t units = Uniform(rng, 1, 15), coders = Uniform(rng, 1, 6);
    const auto grid = RandomGrid(rng, units, coders, codes);
    const Codebook book = fixtures::MakeCodebook(codes);
    const auto cdm = CorrelatedDisagreement(ConnectionDegrees(fixtures::MakeRound(grid), book));
    for (std::size_t x = 0; x < codes.size(); ++x) {
      for (std::size_t y = 0; y < codes.size(); ++y) {
        const double r = cdm.at(x, y);
        check.That(r == cdm.at(y, x), "CDM asymmetric");
        check.That(r >= 0.0 && r <= 1.0, "CDM value outside [0,1]");
      }
    }
    oracle::Grid agreed;
    for (const auto& row : grid) agreed.push_back(std::vector<std::string>(coders, row[0]));
    const auto perfect =
        CorrelatedDisagreement(ConnectionDegrees(fixtures::MakeRound(agreed), book));
    for (double r : perfect.lower()) check.That(r == 0.0, "perfect agreement has r > 0");
  }
}

int PlantedConfusionTrials(Rng& rng, int trials) {
  const auto codes = Codes(7);
  const Codebook book = fixtures::MakeCodebook(codes);
  std::bernoulli_distribution noise(0.1), confuse(0.35);
  int detected = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t x = Uniform(rng, 0, 6);
    std::size_t y = Uniform(rng, 0, 5);
    if (y >= x) ++y;
    oracle::Grid grid(40, std::vector<std::string>(5));
    for (auto& row : grid) {
      const std::size_t truth = Uniform(rng, 0, 6);
      for (auto& cell : row) {
        std::size_t chosen = truth;
        if ((truth == x || truth == y) && confuse(rng)) {
          chosen = truth == x ? y : x;
        } else if (noise(rng)) {
          chosen = Uniform(rng, 0, 6);
        }
        cell = codes[chosen];
      }
    }
    const auto cdm = CorrelatedDisagreement(ConnectionDegrees(fixtures::MakeRound(grid), book));
    bool highest = true;
    for (std::size_t a = 1; a < codes.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        const bool planted = (a == x && b == y) || (a == y && b == x);
        if (!planted && cdm.at(a, b) >= cdm.at(x, y)) highest = false;
      }
    }
    detected += highest;
  }
  return detected;
}

void RoundTrips(Check& check, Rng& rng) {
  static const std::string alphabet = "abcXYZ019 ,;\"'\n\r\t#-_/:.";
  auto text = [&](bool allow_empty) {
    std::string s;
    const int n = Uniform(rng, allow_empty ? 0 : 1, 20);
    for (int i = 0; i < n; ++i) s += alphabet[Uniform(rng, 0, int(alphabet.size()) - 1)];
    if (!allow_empty && s.find_first_not_of(" \t\r\n") == std::string::npos) s += "x";
    return s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    Codebook book;
    std::vector<Unit> units;
    for (int i = 0; i < Uniform(rng, 1, 10); ++i) {
      char color[16];
      std::snprintf(color, sizeof(color), "#%06X", 0x010203 * (i + 1) + trial);
      book.codes.push_back({"K" + std::to_string(i), text(true), text(true), color});
    }
    for (int i = 0; i < Uniform(rng, 1, 10); ++i) {
      units.push_back({"u" + std::to_string(i), text(true), text(false), text(true)});
    }
    check.That(ParseCodebook(FormatCodebook(book), "c.csv") == book, "codebook round trip");
    check.That(ParseUnits(FormatUnits(units), "u.csv") == units, "units round trip");

    const auto grid = RandomGrid(rng, units.size(), Uniform(rng, 1, 4), book.Ids());
    Project project = fixtures::MakeProject(book, {fixtures::MakeRound(grid, grid)});
    project.units = units;
    auto& m = project.rounds[0].assignments;
    m = AssignmentMatrix(project.UnitIds(), m.coder_ids());
    for (std::size_t u = 0; u < units.size(); ++u) {
      for (std::size_t c = 0; c < m.num_coders(); ++c) {
        m.at(u, c) = Assignment{grid[u][c], grid[u][(c + 1) % grid[u].size()]};
      }
    }
    for (std::size_t c = 0; c < m.num_coders(); ++c) {
      const CoderSheet sheet = SheetFromRound(project.rounds[0], c);
      CoderSheet back = ParseCoderSheet(FormatCoderSheet(sheet, true), "s.csv");
      for (auto& row : back.rows) row.line = 0;  // physical lines are not data
      check.That(back == sheet, "coder sheet round trip");
    }
    TempDir dir;
    SaveProject(project, dir.path());
    check.That(LoadProject(dir.path()) == project, "bundle round trip");
  }
}

void SubstitutedPropertySuite(Check& check) {
  const auto start = Clock::now();
  Rng rng(20181101);
  KappaInvariance(check, rng);
  PsMatrixProperties(check, rng);
  CdmProperties(check, rng);
  const int detected = PlantedConfusionTrials(rng, 1000);
  check.That(detected >= 950,
             "planted confusion detected in " + std::to_string(detected) + " of 1000 trials");
  RoundTrips(check, rng);
  check.That(Seconds(start) < 60.0, "property suite over 60 s");
}

// --- Batch/live equivalence --------------------------------------------------

// Batch metrics: run the CLI on the saved bundle and read its JSON exports.
MetricsSnapshot BatchMetrics(const fs::path& bundle, int round, const fs::path& out) {
  std::ostringstream sink;
  const int code = cli::Run({"codewizard", "metrics", "-p", bundle.string(), "--round",
                             std::to_string(round), "-o", out.string()},
                            sink, sink);
  if (code != cli::kExitOk && code != cli::kExitFindings) {
    throw std::runtime_error("batch metrics failed: " + sink.str());
  }
  return LoadExportedSnapshot(out);
}

void EquivalenceOn(Check& check, const std::string& name, std::uint32_t seed) {
  TempDir dir;
  const fs::path bundle = dir / name;
  fs::copy(fs::path(CW_TEST_DATA) / name, bundle, fs::copy_options::recursive);
  auto session = Session::Open(bundle);
  LiveServer server(*session);
  auto client = server.Client();

  const json project = json::parse(client.Get("/api/project")->body);
  const auto coders = project.at("coders").get<std::vector<std::string>>();
  std::vector<std::string> units, codes;
  for (const auto& u : project.at("units")) units.push_back(u.at("id"));
  for (const auto& c : project.at("codebook").at("codes")) codes.push_back(c.at("id"));
  const int round = project.at("rounds").back().at("index");
  const bool double_mode = project.at("rounds").back().at("mode") == "double";

  Rng rng(seed);
  std::uint64_t revision = project.at("revision");
  int committed = 0, conflicts = 0;
  for (int i = 0; i < 50; ++i) {
    json edit{{"coder_id", coders[Uniform(rng, 0, int(coders.size()) - 1)]},
              {"unit_id", units[Uniform(rng, 0, int(units.size()) - 1)]},
              {"field", double_mode && Uniform(rng, 0, 1) ? "secondary" : "primary"},
              {"code", codes[Uniform(rng, 0, int(codes.size()) - 1)]},
              {"base_revision", revision}};
    // Every seventh request replays a stale base and must be refused.
    const bool stale = i % 7 == 6;
    if (stale) edit["base_revision"] = revision - 1;
    int status = 0;
    const json reply = server.Patch(round, edit, &status);
    if (stale) {
      check.That(status == 409, "stale edit not refused with 409");
      ++conflicts;
      continue;
    }
    if (status != 200) {
      check.That(false, "edit rejected: " + reply.dump());
      continue;
    }
    ++committed;
    check.That(reply.at("revision") == revision + 1, "revision not minted in order");
    revision = reply.at("revision");

    const json live_json =
        json::parse(client.Get("/api/metrics?round=" + std::to_string(round))->body);
    const MetricsSnapshot live = SnapshotFromJson(live_json);
    auto saved = client.Post("/api/save", "", "application/json");
    check.That(saved && saved->status == 200, "save failed");
    const MetricsSnapshot batch =
        BatchMetrics(bundle, round, dir / ("batch-" + std::to_string(i)));
    check.That(live.revision == revision && batch.revision == revision,
               "revision mismatch at edit " + std::to_string(i));
    check.That(SameContent(live, batch),
               name + ": live and batch metrics differ at revision " +
                   std::to_string(revision));
    check.That(reply.at("kappa") == live_json.at("kappa"),
               "PATCH kappa differs from GET /api/metrics");
  }
  check.That(committed + conflicts == 50, "not all 50 edits accounted for");
}

void BatchLiveEquivalence(Check& check) {
  EquivalenceOn(check, "five_coders", 50);
  EquivalenceOn(check, "double", 51);
}

// --- Round delta -------------------------------------------------------------

void RoundDeltaFixture(Check& check) {
  // Unit 3 was B A C A A; recoding Coder 1 to A removes the only B/C overlap.
  oracle::Grid after = fixtures::kFiveCoders;
  after[2][0] = "A";
  const Codebook book = fixtures::FiveCodersCodebook();
  const RoundDelta d = ComputeRoundDelta(fixtures::FiveCodersRound(), book,
                                         fixtures::MakeRound(after), book);

  check.That(oracle::R(fixtures::kFiveCoders, "B", "C") > 0.0, "fixture: B/C overlaps before");
  check.That(oracle::R(after, "B", "C") == 0.0, "fixture: B/C overlap gone after");
  const std::vector<std::pair<std::string, std::string>> want{{"B", "C"}};
  check.That(d.newly_zero_pairs == want, "newly_zero_pairs is not [{B, C}]");
  check.That(d.newly_nonzero_pairs.empty(), "unexpected newly nonzero pairs");
  const double oracle_delta = oracle::Kappa(after) - oracle::Kappa(fixtures::kFiveCoders);
  check.That(oracle_delta > 0.0, "fixture: oracle kappa delta not positive");
  check.That(d.kappa_delta() && *d.kappa_delta() > 0.0, "kappa delta not positive");
  if (d.kappa_delta()) check.Near(*d.kappa_delta(), oracle_delta, 1e-12, "kappa delta");
  for (std::size_t x = 1; x < book.size(); ++x) {
    for (std::size_t y = 0; y < x; ++y) {
      const auto& ids = book.Ids();
      check.Near(d.cdm_delta[CorrelatedDisagreementMatrix::PackedIndex(x, y)],
                 oracle::R(after, ids[x], ids[y]) - oracle::R(fixtures::kFiveCoders, ids[x], ids[y]),
                 1e-12, "cdm delta " + ids[x] + ids[y]);
    }
  }
}

struct Criterion {
  const char* name;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"connection-degree fixture", ConnectionDegreeFixture},
      {"correlated disagreement", CorrelatedDisagreementFixture},
      {"fleiss kappa", FleissKappaFixture},
      {"per-unit agreement", PerUnitAgreementFixture},
      {"substituted property suite", SubstitutedPropertySuite},
      {"batch/live equivalence", BatchLiveEquivalence},
      {"round delta", RoundDeltaFixture},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Check check;
    const auto start = Clock::now();
    try {
      c.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = check.failures.empty();
    failed += !ok;
    std::printf("%s %s (%.2fs)\n", ok ? "PASS" : "FAIL", c.name, Seconds(start));
    for (std::size_t i = 0; i < check.failures.size() && i < 10; ++i) {
      std::printf("    %s\n", check.failures[i].c_str());
    }
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
