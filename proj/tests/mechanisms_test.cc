//
// Copyright 2026 The privmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "privmech/mechanisms.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "privmech/distributions.hpp"
#include "privmech/rng.hpp"

namespace privmech {
namespace {

const Candidate kA = Candidate::kA;
const Candidate kB = Candidate::kB;

TEST(ElectionEvalTest, Examples) {
  const TypeProfile aab{kA, kA, kB};
  EXPECT_EQ(ElectionEval(aab, 1), kA);
  EXPECT_EQ(ElectionEval(aab, 2), kB);
  EXPECT_EQ(ElectionEval(TypeProfile{}, 0), kA);
  EXPECT_EQ(ElectionEval(TypeProfile{kB, kB}, -3), kA);
  EXPECT_EQ(ElectionEval(TypeProfile{kA, Abstain{}, kB}, 0), kA);
}

TEST(ElectionEvalTest, RejectsForeignTypes) {
  EXPECT_THROW(ElectionEval(TypeProfile{LocationIndex{0}}, 0), std::domain_error);
}

TEST(ElectionEvalTest, MonotoneInVotesForA) {
  for (std::size_t n = 1; n <= 6; ++n) {
    ForEachTuple(std::vector<PlayerType>{kA, kB, Abstain{}}, n,
                 [&](const std::vector<PlayerType>& p) {
                   for (std::size_t i = 0; i < n; ++i) {
                     if (!(p[i] == PlayerType{kB})) continue;
                     TypeProfile q = p;
                     q[i] = kA;
                     for (std::int64_t r = -8; r <= 8; ++r) {
                       if (ElectionEval(p, r) == kA) {
                         EXPECT_EQ(ElectionEval(q, r), kA);
                       }
                     }
                   }
                 });
  }
}

TEST(FacilityEvalTest, Examples) {
  EXPECT_EQ(FacilityEval(Histogram{{2, 1}}, std::vector<std::int64_t>{0, 0}).value, 0u);
  EXPECT_EQ(FacilityEval(Histogram{{1, 2}}, std::vector<std::int64_t>{2, 0}).value, 0u);
  EXPECT_EQ(FacilityEval(Histogram{{0, 0}}, std::vector<std::int64_t>{0, 5}).value, 1u);
}

TEST(FacilityEvalTest, Errors) {
  EXPECT_THROW(FacilityEval(Histogram{{1, 2}}, std::vector<std::int64_t>{0}),
               std::domain_error);
  EXPECT_THROW(FacilityEval(Histogram{{1, 2}}, std::vector<std::int64_t>{0, -1}),
               std::domain_error);
}

// A single report change that moves the median moves it strictly away from
// the changer's true location.
TEST(FacilityEvalTest, DeviationsMoveMedianAway) {
  for (std::size_t q = 2; q <= 4; ++q) {
    std::vector<PlayerType> values;
    for (std::size_t j = 0; j < q; ++j) values.emplace_back(LocationIndex{j});
    values.emplace_back(Abstain{});
    std::vector<std::vector<std::int64_t>> coins;
    ForEachTuple(std::vector<std::int64_t>{0, 1, 2, 3, 4}, q,
                 [&](const std::vector<std::int64_t>& r) { coins.push_back(r); });
    std::set<Histogram> seen;
    for (std::size_t others = 0; others <= 4; ++others) {
      ForEachTuple(values, others, [&](const std::vector<PlayerType>& rest) {
        const Histogram h_rest = BuildHistogram(rest, q);
        if (!seen.insert(h_rest).second) return;
        for (std::size_t truth = 0; truth < q; ++truth) {
          for (std::size_t lie = 0; lie <= q; ++lie) {
            if (lie == truth) continue;
            Histogram ht = h_rest;
            ++ht.counts[truth];
            Histogram hl = h_rest;
            if (lie < q) ++hl.counts[lie];
            for (const auto& r : coins) {
              const auto ot = FacilityEval(ht, r).value;
              const auto ol = FacilityEval(hl, r).value;
              if (ot == ol) continue;
              const auto dist = [&](std::size_t o) {
                return o > truth ? o - truth : truth - o;
              };
              ASSERT_GT(dist(ol), dist(ot));
            }
          }
        }
      });
    }
  }
}

const VcgInstance kTwoByOne(2, 1);
const UtilityRow kRow10({1, 0}, 1);
const UtilityRow kRow01({0, 1}, 1);

TEST(VcgEvalTest, TwoPlayerExample) {
  const TypeProfile p{kRow10, kRow01};
  const VcgOutput out = VcgEval(kTwoByOne, p, std::vector<std::int64_t>{0, 0});
  EXPECT_EQ(out.winner.value, 1u);
  ASSERT_EQ(out.info.entries().size(), 1u);
  EXPECT_EQ(out.info.entries()[0].outcome.value, 0u);
  EXPECT_EQ(out.info.Gap(out.info.entries()[0]), Rational(1, 2));
  EXPECT_EQ(ToString(out), "o*=1 pi={(0,1/2)}");
}

TEST(VcgEvalTest, SinglePlayerExample) {
  const VcgOutput out =
      VcgEval(kTwoByOne, TypeProfile{kRow10}, std::vector<std::int64_t>{0, 0});
  EXPECT_EQ(out.winner.value, 0u);
  EXPECT_EQ(out.info.GapFor(OutcomeIndex{1}), Rational(1, 2));
  EXPECT_FALSE(out.info.GapFor(OutcomeIndex{0}).has_value());
}

TEST(VcgEvalTest, AllZeroRowsPickLastOutcome) {
  for (std::size_t o = 1; o <= 4; ++o) {
    const VcgInstance inst(o, 2);
    const TypeProfile p{UtilityRow::Zero(o, 2), Abstain{}};
    EXPECT_EQ(VcgEval(inst, p, std::vector<std::int64_t>(o, 0)).winner.value, o - 1);
  }
}

TEST(VcgEvalTest, PaymentInfoWindow) {
  // V = (0, 3 + 1/3, 1 + 2/3) with M = 2: only outcome 2 is within M.
  const VcgInstance inst(3, 2);
  const TypeProfile p{UtilityRow({0, 2, 1}, 2), UtilityRow({0, 1, 0}, 2)};
  const VcgOutput out = VcgEval(inst, p, std::vector<std::int64_t>{0, 0, 0});
  EXPECT_EQ(out.winner.value, 1u);
  ASSERT_EQ(out.info.entries().size(), 1u);
  EXPECT_EQ(out.info.GapFor(OutcomeIndex{2}), Rational(5, 3));
}

TEST(VcgEvalTest, UniqueArgmaxAndGapRangeExhaustive) {
  for (std::size_t n_out = 1; n_out <= 4; ++n_out) {
    for (int m = 1; m <= 2; ++m) {
      const VcgInstance inst(n_out, m);
      const auto rows = inst.AllRows();
      std::vector<PlayerType> values(rows.begin(), rows.end());
      std::set<std::vector<std::int64_t>> welfare;
      ForEachTuple(values, 2, [&](const std::vector<PlayerType>& p) {
        welfare.insert(inst.Welfare(p));
      });
      std::vector<std::int64_t> lam_values{-3, -2, -1, 0, 1, 2, 3};
      for (const auto& w : welfare) {
        ForEachTuple(lam_values, n_out, [&](const std::vector<std::int64_t>& lam) {
          const auto v = ScaledValues(inst, w, lam);
          std::set<std::int64_t> distinct(v.begin(), v.end());
          ASSERT_EQ(distinct.size(), v.size());
          const VcgOutput out = VcgEvalFromWelfare(inst, w, lam);
          ASSERT_EQ(out.winner.value, VcgWinnerFromWelfare(inst, w, lam));
          for (const auto& e : out.info.entries()) {
            ASSERT_NE(e.outcome, out.winner);
            ASSERT_GT(e.scaled_gap, 0);
            ASSERT_LE(out.info.Gap(e), Rational(m));
          }
        });
      }
    }
  }
}

TEST(VcgPaymentTest, Examples) {
  const TypeProfile p{kRow10, kRow01};
  const VcgOutput out = VcgEval(kTwoByOne, p, std::vector<std::int64_t>{0, 0});
  EXPECT_EQ(VcgPayment(kRow10, out), Rational(0));
  EXPECT_EQ(VcgPayment(kRow01, out), Rational(1, 2));
  EXPECT_EQ(VcgPayment(UtilityRow({1, 1}, 1), out), Rational(0));
}

TEST(VcgPaymentTest, IdentityExamples) {
  const TypeProfile p{kRow10, kRow01};
  EXPECT_TRUE(VcgPaymentIdentityCheck(kTwoByOne, p, std::vector<std::int64_t>{0, 0}, 0));
  EXPECT_TRUE(VcgPaymentIdentityCheck(kTwoByOne, p, std::vector<std::int64_t>{0, 0}, 1));
}

// The public-information payment equals the externality form; restricting
// the max to released outcomes never changes the value.
TEST(VcgPaymentTest, IdentityAndNonnegativityExhaustive) {
  for (std::size_t n_out = 1; n_out <= 3; ++n_out) {
    for (int m = 1; m <= 2; ++m) {
      const VcgInstance inst(n_out, m);
      const auto rows = inst.AllRows();
      std::vector<PlayerType> values(rows.begin(), rows.end());
      values.emplace_back(Abstain{});
      std::vector<std::int64_t> lam_values{-3, -2, -1, 0, 1, 2, 3};
      for (std::size_t n = 1; n <= 2; ++n) {
        ForEachTuple(values, n, [&](const std::vector<PlayerType>& p) {
          ForEachTuple(lam_values, n_out, [&](const std::vector<std::int64_t>& lam) {
            const VcgOutput out = VcgEval(inst, p, lam);
            for (std::size_t i = 0; i < n; ++i) {
              ASSERT_TRUE(VcgPaymentIdentityCheck(inst, p, lam, i));
              const UtilityRow row = inst.RowOf(p[i]);
              ASSERT_GE(VcgPaymentScaled(row, out), 0);
              // Without player i the winner is unchanged => payment 0.
              TypeProfile without = p;
              without[i] = Abstain{};
              if (VcgEval(inst, without, lam).winner == out.winner) {
                ASSERT_EQ(VcgPaymentScaled(row, out), 0);
              }
            }
          });
        });
      }
    }
  }
}

TEST(VcgInstanceTest, RowsAndWelfare) {
  EXPECT_EQ(kTwoByOne.RowOf(Abstain{}), UtilityRow::Zero(2, 1));
  EXPECT_THROW(kTwoByOne.RowOf(UtilityRow({1, 0, 0}, 1)), std::domain_error);
  EXPECT_THROW(kTwoByOne.RowOf(Candidate::kA), std::domain_error);
  EXPECT_EQ(kTwoByOne.Welfare(TypeProfile{kRow10, kRow10, Abstain{}}),
            (std::vector<std::int64_t>{2, 0}));
  EXPECT_THROW(VcgInstance(0, 1), std::domain_error);
}

// Direct double sum over prior support and the truncated product window.
double BruteExternality(const VcgInstance& inst,
                        const std::vector<std::pair<TypeProfile, double>>& prior,
                        std::size_t player, double eps, const TruncationWindow& w) {
  const NoiseSpec spec = VcgNoise(eps, inst.max_utility(), inst.num_outcomes());
  double total = 0.0;
  for (const auto& [p, mass] : prior) {
    TypeProfile without = p;
    without[player] = Abstain{};
    ForEachNoiseVector(spec, w, [&](const std::vector<std::int64_t>& lam, double pr) {
      const auto o_star = VcgEval(inst, p, lam).winner.value;
      const auto o_minus = VcgEval(inst, without, lam).winner.value;
      double ext = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (j == player) continue;
        const UtilityRow row = inst.RowOf(p[j]);
        ext += row[o_minus] - row[o_star];
      }
      total += mass * pr * ext;
    });
  }
  return total;
}

TEST(ExpectedExternalityTest, MatchesBruteForce) {
  const double eps = 1.0;
  const NoiseSpec spec = VcgNoise(eps, 1, 2);
  const TruncationWindow w = TailBound(spec, 12, 2);
  const std::vector<std::pair<TypeProfile, double>> point{{{kRow10, kRow01}, 1.0}};
  const std::vector<std::pair<TypeProfile, double>> two{{{kRow10, kRow01}, 0.3},
                                                        {{kRow01, kRow01}, 0.7}};
  for (std::size_t i = 0; i < 2; ++i) {
    const BoundedValue a = ExpectedExternalityPayment(kTwoByOne, point, i, eps, w);
    EXPECT_NEAR(a.value, BruteExternality(kTwoByOne, point, i, eps, w), 1e-12);
    EXPECT_NEAR(a.slack, w.tail_mass, 1e-18);
    const BoundedValue b = ExpectedExternalityPayment(kTwoByOne, two, i, eps, w);
    EXPECT_NEAR(b.value, BruteExternality(kTwoByOne, two, i, eps, w), 1e-12);
  }
}

TEST(ExpectedExternalityTest, IndifferentPlayerPaysNothing) {
  const NoiseSpec spec = VcgNoise(1.0, 1, 2);
  const TruncationWindow w = TailBound(spec, 10, 2);
  const std::vector<std::pair<TypeProfile, double>> prior{
      {{UtilityRow({1, 1}, 1), kRow01}, 0.5}, {{UtilityRow({0, 0}, 1), kRow10}, 0.5}};
  const BoundedValue v = ExpectedExternalityPayment(kTwoByOne, prior, 0, 1.0, w);
  EXPECT_EQ(v.value, 0.0);
}

TEST(ExpectedExternalityTest, Errors) {
  const TruncationWindow w = TailBound(VcgNoise(1.0, 1, 2), 5, 2);
  EXPECT_THROW(ExpectedExternalityPayment(kTwoByOne, {}, 0, 1.0, w), std::domain_error);
  EXPECT_THROW(ExpectedExternalityPayment(kTwoByOne, {{{kRow10}, 0.5}}, 0, 1.0, w),
               std::domain_error);
}

TEST(RunTest, DeterministicReplay) {
  const TypeProfile p{kA, kB, kA};
  const ElectionMechanism e(0.5);
  const FacilityMechanism f(LocationSet::Uniform(3), 0.5);
  const VcgMechanism v(kTwoByOne, 0.5);
  const TypeProfile pf{LocationIndex{0}, LocationIndex{2}};
  const TypeProfile pv{kRow10, kRow01};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream a(seed), b(seed);
    EXPECT_EQ(e.Run(p, a), e.Run(p, b));
    EXPECT_EQ(f.Run(pf, a), f.Run(pf, b));
    EXPECT_EQ(v.Run(pv, a), v.Run(pv, b));
  }
}

TEST(RunTest, LargeEpsilonIsMajority) {
  const ElectionMechanism e(60.0);
  RngStream rng(1);
  for (int t = 0; t < 200; ++t) {
    EXPECT_EQ(e.Run(TypeProfile{kA, kB, kB}, rng), kB);
    EXPECT_EQ(e.Run(TypeProfile{kA, kB}, rng), kA);
  }
}

TEST(RunTest, FrequencyMatchesClosedForm) {
  const std::size_t runs = 200000;
  for (double eps : {0.2, 1.0}) {
    const ElectionMechanism e(eps);
    const TypeProfile p{kA, kA, kB};
    const double pa = ElectionOutcomeDist(p, eps).Prob(kA);
    RngStream root(31);
    std::size_t wins = 0;
    for (std::size_t t = 0; t < runs; ++t) {
      RngStream rng = root.Substream(t);
      wins += e.Run(p, rng) == kA ? 1 : 0;
    }
    const double sigma = std::sqrt(runs * pa * (1 - pa));
    EXPECT_NEAR(static_cast<double>(wins), runs * pa, 4 * sigma);
  }
}

}  // namespace
}  // namespace privmech
