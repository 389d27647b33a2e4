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

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"

namespace codewizard {
namespace {

using fixtures::FiveCodersCodebook;
using fixtures::FiveCodersRound;
using fixtures::MakeCodebook;
using fixtures::MakeRound;

std::size_t Idx(const Codebook& book, const std::string& id) {
  return *book.IndexOf(id);
}

TEST(FleissKappaTest, FiveCodersMatchesOracle) {
  const KappaResult k = FleissKappa(FiveCodersRound());
  EXPECT_NEAR(k.p_bar, 0.54, 1e-12);
  EXPECT_NEAR(k.p_e, 0.3408, 1e-12);
  EXPECT_NEAR(k.kappa, oracle::Kappa(fixtures::kFiveCoders), 1e-12);
  EXPECT_NEAR(k.kappa, 0.3022, 5e-4);
  EXPECT_EQ(k.n_coders, 5u);
  EXPECT_EQ(k.n_units_included, 5u);
  EXPECT_TRUE(k.excluded_units.empty());
  EXPECT_DOUBLE_EQ(RoundForDisplay(k.kappa, 3), 0.302);
  EXPECT_DOUBLE_EQ(RoundForDisplay(k.kappa, 1), 0.3);
}

TEST(FleissKappaTest, ExcludesIncompleteUnits) {
  Round round = FiveCodersRound();
  round.assignments.at(0, 2).reset();
  const KappaResult k = FleissKappa(round);
  ASSERT_EQ(k.excluded_units, std::vector<std::string>{"Unit 1"});
  EXPECT_EQ(k.n_units_included, 4u);
  oracle::Grid rest(fixtures::kFiveCoders.begin() + 1, fixtures::kFiveCoders.end());
  EXPECT_NEAR(k.kappa, oracle::Kappa(rest), 1e-12);
}

TEST(FleissKappaTest, RefusesDegenerateRounds) {
  EXPECT_THROW(FleissKappa(MakeRound({{"A"}, {"B"}})), MetricError);
  try {
    FleissKappa(MakeRound({{"A", "A"}, {"A", "A"}}));
    FAIL() << "expected refusal";
  } catch (const MetricError& e) {
    EXPECT_NE(std::string(e.what()).find("no category variance"), std::string::npos);
  }
  Round empty = MakeRound({{"A", "B"}});
  empty.assignments.at(0, 0).reset();
  EXPECT_THROW(FleissKappa(empty), MetricError);
}

TEST(PerUnitAgreementTest, FourCoderRows) {
  const Round round = MakeRound({{"SB", "SB", "SB", "SB"}, {"CT", "SB", "SB", "CT"}});
  EXPECT_DOUBLE_EQ(RoundForDisplay(PerUnitAgreement(round, "Unit 1").p_i, 2), 1.00);
  const double split = PerUnitAgreement(round, "Unit 2").p_i;
  EXPECT_DOUBLE_EQ(split, 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(RoundForDisplay(split, 2), 0.33);
}

TEST(PerUnitAgreementTest, MatchesOracleAndSkipsMissing) {
  const Round round = FiveCodersRound();
  for (std::size_t u = 0; u < fixtures::kFiveCoders.size(); ++u) {
    EXPECT_NEAR(PerUnitAgreement(round, "Unit " + std::to_string(u + 1)).p_i,
                oracle::UnitAgreement(fixtures::kFiveCoders[u]), 1e-15);
  }
  Round holes = round;
  holes.assignments.at(1, 0).reset();
  const auto a = PerUnitAgreement(holes, "Unit 2");
  EXPECT_EQ(a.n_coders, 4u);
  EXPECT_DOUBLE_EQ(a.p_i, oracle::UnitAgreement({"B", "B", "B", "A"}));
  for (int c = 1; c < 5; ++c) holes.assignments.at(1, c).reset();
  EXPECT_THROW(PerUnitAgreement(holes, "Unit 2"), MetricError);
  EXPECT_THROW(PerUnitAgreement(round, "Unit 9"), MetricError);
}

TEST(ConnectionDegreesTest, FiveCodersSums) {
  const Codebook book = FiveCodersCodebook();
  const auto t = ConnectionDegrees(FiveCodersRound(), book);
  const auto A = Idx(book, "A"), B = Idx(book, "B"), C = Idx(book, "C");
  EXPECT_EQ(t.sum(A, A), 8);
  EXPECT_EQ(t.sum(B, B), 7);
  EXPECT_EQ(t.sum(C, C), 10);
  EXPECT_EQ(t.sum(A, B), 5);
  EXPECT_EQ(t.sum(A, C), 2);
  EXPECT_EQ(t.sum(B, C), 1);
  EXPECT_EQ(t.sum(C, A), 2);
  // Unit 1: C A C C C
  EXPECT_EQ(t.degree(0, A, A), 1);
  EXPECT_EQ(t.degree(0, C, C), 4);
  EXPECT_EQ(t.degree(0, A, C), 1);
  EXPECT_EQ(t.degree(0, B, B), 0);
  EXPECT_EQ(t.degree(0, A, B), 0);
  EXPECT_EQ(t.degree(0, B, C), 0);
  // Unanimous unit.
  EXPECT_EQ(t.degree(3, C, C), 5);
  EXPECT_EQ(t.degree(3, A, C), 0);
}

TEST(ConnectionDegreesTest, AgreesWithBruteForce) {
  const Codebook book = FiveCodersCodebook();
  const auto t = ConnectionDegrees(FiveCodersRound(), book);
  for (const auto& x : book.Ids()) {
    for (const auto& y : book.Ids()) {
      EXPECT_EQ(t.sum(Idx(book, x), Idx(book, y)),
                oracle::DegreeSum(fixtures::kFiveCoders, x, y));
    }
  }
}

TEST(CorrelatedDisagreementTest, FiveCodersValues) {
  const Codebook book = FiveCodersCodebook();
  const auto cdm = CorrelatedDisagreement(ConnectionDegrees(FiveCodersRound(), book));
  const auto A = Idx(book, "A"), B = Idx(book, "B"), C = Idx(book, "C");
  EXPECT_NEAR(cdm.at(A, C), 2.0 / std::sqrt(80.0), 1e-15);
  EXPECT_NEAR(cdm.at(A, B), 5.0 / std::sqrt(56.0), 1e-15);
  EXPECT_NEAR(cdm.at(B, C), 1.0 / std::sqrt(70.0), 1e-15);
  EXPECT_NEAR(cdm.at(A, C), 0.2236, 1e-4);
  EXPECT_NEAR(cdm.at(A, B), 0.6682, 1e-4);
  EXPECT_NEAR(cdm.at(B, C), 0.1195, 1e-4);
  EXPECT_DOUBLE_EQ(RoundForDisplay(cdm.at(A, C), 1), 0.2);
  EXPECT_DOUBLE_EQ(RoundForDisplay(cdm.at(A, B), 1), 0.7);
  EXPECT_DOUBLE_EQ(RoundForDisplay(cdm.at(B, C), 1), 0.1);
  EXPECT_DOUBLE_EQ(cdm.at(C, A), cdm.at(A, C));
  EXPECT_DOUBLE_EQ(cdm.at(A, A), 1.0);
  EXPECT_EQ(cdm.lower().size(), 3u);
}

TEST(CorrelatedDisagreementTest, UnusedCodeIsZero) {
  const Codebook book = MakeCodebook({"A", "B", "C", "D"});
  const auto cdm = CorrelatedDisagreement(ConnectionDegrees(FiveCodersRound(), book));
  const auto D = Idx(book, "D");
  EXPECT_FALSE(cdm.used(D));
  for (std::size_t x = 0; x < book.size(); ++x) EXPECT_EQ(cdm.at(D, x), 0.0);
}

TEST(CorrelatedDisagreementTest, PackedIndexLayout) {
  EXPECT_EQ(CorrelatedDisagreementMatrix::PackedIndex(1, 0), 0u);
  EXPECT_EQ(CorrelatedDisagreementMatrix::PackedIndex(2, 0), 1u);
  EXPECT_EQ(CorrelatedDisagreementMatrix::PackedIndex(2, 1), 2u);
  EXPECT_EQ(CorrelatedDisagreementMatrix::PackedIndex(0, 3), 3u);
}

// Thirteen uses of DS as primary: secondaries CM once, CD once, DS 11 times.
Round DsRound() {
  oracle::Grid primary, secondary;
  for (int i = 0; i < 13; ++i) {
    primary.push_back({"DS"});
    secondary.push_back({i == 0 ? "CM" : i == 1 ? "CD" : "DS"});
  }
  return MakeRound(primary, secondary);
}

TEST(PrimarySecondaryTest, ThirteenAssignmentRow) {
  const Codebook book = fixtures::SevenCodeCodebook();
  const auto ps = PrimarySecondary(DsRound(), book, MetricScope::Team());
  const auto DS = Idx(book, "DS");
  EXPECT_EQ(ps.row_counts[DS], 13u);
  EXPECT_DOUBLE_EQ(RoundForDisplay(*ps.cell(DS, Idx(book, "CM")), 3), 0.077);
  EXPECT_DOUBLE_EQ(RoundForDisplay(*ps.cell(DS, Idx(book, "CD")), 3), 0.077);
  EXPECT_DOUBLE_EQ(RoundForDisplay(*ps.cell(DS, DS), 3), 0.846);
  EXPECT_DOUBLE_EQ(RoundForDisplay(*ps.cell(DS, DS) * 100, 0), 85);
  EXPECT_DOUBLE_EQ(RoundForDisplay(*ps.cell(DS, Idx(book, "CM")) * 100, 0), 8);
  EXPECT_FALSE(ps.cell(Idx(book, "SB"), DS).has_value());

  const auto cert = Certainty(DsRound(), book, MetricScope::Team());
  EXPECT_DOUBLE_EQ(*cert.Get("DS").certainty, 11.0 / 13.0);
  EXPECT_EQ(cert.Get("DS").n_primary_uses, 13u);
  EXPECT_FALSE(cert.Get("UP").certainty.has_value());
}

TEST(PrimarySecondaryTest, IdentityWhenAlwaysCertain) {
  const Codebook book = FiveCodersCodebook();
  const Round round = MakeRound(fixtures::kFiveCoders, fixtures::kFiveCoders);
  const auto ps = PrimarySecondary(round, book, MetricScope::Coder("Coder 2"));
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t s = 0; s < 3; ++s) {
      EXPECT_EQ(*ps.cell(p, s), p == s ? 1.0 : 0.0);
    }
  }
  EXPECT_THROW(PrimarySecondary(round, book, MetricScope::Coder("Coder 9")),
               MetricError);
}

TEST(PrimarySecondaryTest, RefusesSingleCoding) {
  try {
    Certainty(FiveCodersRound(), FiveCodersCodebook(), MetricScope::Team());
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_STREQ(e.what(), "certainty requires double coding");
  }
  EXPECT_THROW(PrimarySecondary(FiveCodersRound(), FiveCodersCodebook(), MetricScope::Team()),
               MetricError);
}

TEST(RoundDeltaTest, IdenticalRounds) {
  const auto d = ComputeRoundDelta(FiveCodersRound(), FiveCodersCodebook(), FiveCodersRound(),
                                   FiveCodersCodebook());
  EXPECT_EQ(*d.kappa_delta(), 0.0);
  EXPECT_EQ(d.pairs_changed(), 0u);
  for (double v : d.cdm_delta) EXPECT_EQ(v, 0.0);
}

TEST(RoundDeltaTest, FullAgreementRecoding) {
  const oracle::Grid agreed = {{"C", "C", "C", "C", "C"},
                               {"B", "B", "B", "B", "B"},
                               {"A", "A", "A", "A", "A"},
                               {"C", "C", "C", "C", "C"},
                               {"B", "B", "B", "B", "B"}};
  const auto d = ComputeRoundDelta(FiveCodersRound(), FiveCodersCodebook(),
                                   MakeRound(agreed), FiveCodersCodebook());
  EXPECT_NEAR(*d.kappa_delta(), oracle::Kappa(agreed) - oracle::Kappa(fixtures::kFiveCoders),
              1e-12);
  EXPECT_NEAR(*d.kappa_delta(), 1.0 - 0.3022, 5e-4);
  EXPECT_EQ(d.newly_zero_pairs.size(), 3u);
  EXPECT_TRUE(d.newly_nonzero_pairs.empty());
}

TEST(RoundDeltaTest, RejectsDifferentCodebooks) {
  try {
    ComputeRoundDelta(FiveCodersRound(), FiveCodersCodebook(), FiveCodersRound(),
                      MakeCodebook({"A", "B", "X"}));
    FAIL();
  } catch (const RejectionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("C"), std::string::npos);
    EXPECT_NE(what.find("X"), std::string::npos);
  }
}

TEST(ShadeTest, Thresholds) {
  EXPECT_EQ(DisagreementShade(1.0), Shade::kNone);
  EXPECT_EQ(DisagreementShade(0.67), Shade::kLight);
  EXPECT_EQ(DisagreementShade(0.99), Shade::kLight);
  EXPECT_EQ(DisagreementShade(0.5), Shade::kMedium);
  EXPECT_EQ(DisagreementShade(0.34), Shade::kMedium);
  EXPECT_EQ(DisagreementShade(0.33), Shade::kDark);
  EXPECT_EQ(DisagreementShade(2.0 / 6.0), Shade::kDark);
  EXPECT_EQ(DisagreementShade(0.0), Shade::kDark);
  EXPECT_EQ(DisagreementShade(0.17), Shade::kDark);
  EXPECT_THROW(DisagreementShade(-0.1), MetricError);
  EXPECT_THROW(DisagreementShade(1.1), MetricError);
  EXPECT_THROW(DisagreementShade(0.5, {0.8, 0.2}), MetricError);
  EXPECT_EQ(ToString(Shade::kMedium), "medium");
}

}  // namespace
}  // namespace codewizard
