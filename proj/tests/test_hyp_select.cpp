// Copyright 2026 The dpdi Authors
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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dpdi/distribution.hpp"
#include "dpdi/selection.hpp"
#include "stat_helpers.hpp"

namespace dpdi {
namespace {

using testutil::chi2_pvalue;

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Hypotheses on [domain] with pairwise TV at least `tv`.
std::vector<DiscreteDistribution> separated_hypotheses(std::size_t count, std::size_t domain, double tv, Rng& rng) {
  std::vector<DiscreteDistribution> q;
  while (q.size() < count) {
    auto cand = dirichlet_draw(domain, 0.5, rng);
    bool ok = true;
    for (const auto& h : q) ok = ok && tv_distance(h, cand) >= tv;
    if (ok) q.push_back(cand);
  }
  return q;
}

TEST(RoundRobin, Counts) {
  AdversarialComparator one_cmp(ItemSet({3.0}), ComparatorPolicy::kHonest);
  RoundOracle one(one_cmp);
  auto t1 = round_robin(ItemSet({3.0}), one);
  EXPECT_EQ(t1.total_queries, 0);
  EXPECT_EQ(t1.winner, 0u);
  ItemSet eight({0, 1, 2, 3, 4, 5, 6, 7});
  AdversarialComparator cmp(eight, ComparatorPolicy::kRandomizedAdversary, 1);
  RoundOracle oracle(cmp);
  auto t8 = round_robin(eight, oracle);
  EXPECT_EQ(t8.total_queries, 28);
  EXPECT_EQ(t8.rounds, 1);
  EXPECT_THROW(round_robin(ItemSet(std::vector<double>{}), oracle), EmptyInput);
}

TEST(RoundRobin, HonestFindsMaximum) {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(12);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.5 * static_cast<double>(i);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    ItemSet items(v);
    AdversarialComparator cmp(items, ComparatorPolicy::kHonest);
    RoundOracle oracle(cmp);
    auto tr = round_robin(items, oracle);
    EXPECT_EQ(tr.gap, 0.0);
  }
}

// Independent enumeration: every answer assignment on the close pairs, winner
// = most wins with ties to the lowest index.
double brute_worst_round_robin(const std::vector<double>& v) {
  const std::size_t k = v.size();
  std::vector<std::pair<std::size_t, std::size_t>> close;
  std::vector<int> base(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (std::fabs(v[i] - v[j]) <= 1.0) {
        close.emplace_back(i, j);
      } else {
        ++base[v[i] > v[j] ? i : j];
      }
    }
  }
  double worst = 1e300;
  for (std::uint64_t mask = 0; mask < (1ULL << close.size()); ++mask) {
    auto wins = base;
    for (std::size_t c = 0; c < close.size(); ++c) ++wins[((mask >> c) & 1) ? close[c].second : close[c].first];
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (wins[i] > wins[best]) best = i;
    }
    worst = std::min(worst, v[best]);
  }
  return worst;
}

TEST(RoundRobin, ExhaustiveAdversaryTwoApproximation) {
  Rng rng(3);
  for (std::size_t k = 1; k <= 6; ++k) {
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> v(k);
      for (auto& x : v) x = 0.5 * static_cast<double>(rng.below(7));
      const double worst = round_robin_exhaustive_worst(v);
      EXPECT_EQ(worst, brute_worst_round_robin(v));
      EXPECT_GE(worst, *std::max_element(v.begin(), v.end()) - 2.0);
    }
  }
}

TEST(Comparator, ScriptedContractEnforced) {
  ItemSet items({0.0, 5.0});
  AdversarialComparator cmp(items, ComparatorPolicy::kScripted, 0, [](std::size_t i, std::size_t) { return i; });
  RoundOracle oracle(cmp);
  EXPECT_THROW(oracle.run_round({{0, 1}}), ProtocolViolation);
  EXPECT_THROW(AdversarialComparator(items, ComparatorPolicy::kScripted), InvalidParameter);
}

TEST(MultiRound, SingleRoundIsRoundRobin) {
  ItemSet items({0.2, 1.1, 0.7, 1.9, 0.4, 1.5});
  AdversarialComparator a(items, ComparatorPolicy::kGreedyMinimizingAdversary);
  AdversarialComparator b(items, ComparatorPolicy::kGreedyMinimizingAdversary);
  RoundOracle oa(a), ob(b);
  auto ta = multi_round(items, 1, oa);
  auto tb = round_robin(items, ob);
  EXPECT_EQ(ta.winner, tb.winner);
  EXPECT_EQ(ta.total_queries, tb.total_queries);
  EXPECT_EQ(ta.rounds, 1);
}

TEST(MultiRound, SixtyFourTwoRounds) {
  std::vector<double> v(64);
  std::iota(v.begin(), v.end(), 0.0);
  ItemSet items(v);
  AdversarialComparator cmp(items, ComparatorPolicy::kHonest);
  RoundOracle oracle(cmp);
  auto tr = multi_round(items, 2, oracle);
  EXPECT_EQ(tr.rounds, 2);
  EXPECT_EQ(tr.per_round, (std::vector<std::int64_t>{96, 120}));
  EXPECT_EQ(tr.total_queries, 216);
  EXPECT_EQ(tr.survivors_before_last, 16u);
  EXPECT_EQ(tr.gap, 0.0);
}

// Query count at k = b^{2^t-1}: k/b groups of b, then the b^{2^t-2} =
// (b^2)^{2^{t-1}-1} survivors recurse with t-1.
std::int64_t recursion_in_base(std::int64_t b, int t) {
  const std::int64_t k = ipow(b, (1 << t) - 1);
  if (t == 1) return k * (k - 1) / 2;
  return (k / b) * (b * (b - 1) / 2) + recursion_in_base(b * b, t - 1);
}

TEST(MultiRound, PerfectPowerIdentities) {
  for (int t = 1; t <= 4; ++t) {
    for (std::int64_t b = 2;; b += (t == 1 ? 31 : 1)) {
      const std::int64_t k = ipow(b, (1 << t) - 1);
      if (k > 4096 || (t == 1 && k > 512)) break;
      std::vector<double> v(static_cast<std::size_t>(k));
      std::iota(v.begin(), v.end(), 0.0);
      ItemSet items(v);
      AdversarialComparator cmp(items, ComparatorPolicy::kRandomizedAdversary, static_cast<std::uint64_t>(k));
      RoundOracle oracle(cmp);
      auto tr = multi_round(items, t, oracle);
      EXPECT_EQ(tr.total_queries, recursion_in_base(b, t)) << "k=" << k << " t=" << t;
      EXPECT_EQ(tr.total_queries, multi_round_query_recursion(k, t));
      EXPECT_EQ(tr.rounds, t);
      EXPECT_EQ(static_cast<std::int64_t>(tr.survivors_before_last), t == 1 ? k : ipow(b, 1 << (t - 1)));
      std::int64_t sum = 0;
      for (auto q : tr.per_round) sum += q;
      EXPECT_EQ(sum, tr.total_queries);
    }
  }
}

TEST(MultiRound, ApproximationUnderAdversaries) {
  Rng rng(4);
  for (int t = 1; t <= 3; ++t) {
    for (int rep = 0; rep < 40; ++rep) {
      std::vector<double> v(100);
      for (auto& x : v) x = 6.0 * rng.uniform();
      ItemSet items(v);
      for (auto policy : {ComparatorPolicy::kRandomizedAdversary, ComparatorPolicy::kGreedyMinimizingAdversary}) {
        AdversarialComparator cmp(items, policy, rng());
        RoundOracle oracle(cmp);
        auto tr = multi_round(items, t, oracle);
        EXPECT_LE(tr.gap, 2.0 * t);
        EXPECT_EQ(tr.rounds, t);
      }
    }
  }
}

TEST(BetterMultiRound, SingleRound) {
  ItemSet items({0.2, 1.1, 0.7, 1.9});
  AdversarialComparator cmp(items, ComparatorPolicy::kHonest);
  RoundOracle oracle(cmp);
  Rng rng(5);
  auto tr = better_multi_round(items, 1, oracle, rng);
  EXPECT_EQ(tr.total_queries, 6);
  EXPECT_EQ(tr.winner, 3u);
}

TEST(BetterMultiRound, ThreeApproximation) {
  const std::size_t k = 256;
  const int t = 3;
  Rng rng(6);
  int success = 0;
  const double budget = 10201.0 * std::pow(static_cast<double>(k), 1.0 + 1.0 / 7.0) * t;
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<double> v(k);
    for (auto& x : v) x = 8.0 * rng.uniform();
    ItemSet items(v);
    AdversarialComparator cmp(items, ComparatorPolicy::kRandomizedAdversary, rng());
    RoundOracle oracle(cmp);
    auto tr = better_multi_round(items, t, oracle, rng);
    success += tr.gap <= 3.0;
    EXPECT_EQ(tr.rounds, t);
    EXPECT_LE(static_cast<double>(tr.total_queries), budget);
    EXPECT_LE(tr.total_queries, better_multi_round_max_queries(k, t));
  }
  EXPECT_GE(success, 340);
}

TEST(BetterMultiRound, SmallHConstant) {
  // With a small H the final round sees only part of the items.
  const std::size_t k = 512;
  Rng rng(7);
  std::vector<double> v(k);
  for (auto& x : v) x = 8.0 * rng.uniform();
  ItemSet items(v);
  AdversarialComparator cmp(items, ComparatorPolicy::kRandomizedAdversary, 8);
  RoundOracle oracle(cmp);
  EXPECT_LT(better_multi_round_h_size(k, 3, 1.0), k);
  auto tr = better_multi_round(items, 3, oracle, rng, 1.0);
  EXPECT_EQ(tr.rounds, 3);
  EXPECT_LE(tr.total_queries, better_multi_round_max_queries(k, 3, 1.0));
}

TEST(Scheffe, HandExample) {
  DiscreteDistribution q1({0.5, 0.3, 0.2}), q2({0.2, 0.3, 0.5});
  EXPECT_EQ(scheffe_set(q1, q2), (std::vector<char>{1, 0, 0}));
  // p_hat(S) = 2/5 is closer to q1(S) = 0.5 than to q2(S) = 0.2.
  EXPECT_EQ(scheffe({1, 1, 2, 3, 3}, q1, q2), 1);
  EXPECT_EQ(scheffe({3, 3, 2, 3, 1}, q1, q2), 2);
  EXPECT_EQ(scheffe({1, 2, 3}, q1, q1), 2);
}

TEST(Scheffe, Realizable) {
  Rng rng(8);
  auto q = separated_hypotheses(2, 10, 0.5, rng);
  int right = 0;
  for (int t = 0; t < 400; ++t) right += scheffe(sample(q[0], 500, rng), q[0], q[1]) == 1;
  EXPECT_GE(right, 380);
}

TEST(Scheffe, DeviationGuarantee) {
  // Realizable case: TV(p, chosen) exceeds sqrt(2.5 ln(1/beta)/n) w.p. <= beta.
  const std::size_t n = 500;
  const double beta = 0.1, slack = std::sqrt(2.5 * std::log(1.0 / beta) / n);
  DiscreteDistribution p({0.3, 0.3, 0.2, 0.2});
  DiscreteDistribution q2({0.3 + 1.1 * slack, 0.3, 0.2 - 1.1 * slack, 0.2});
  ASSERT_GT(tv_distance(p, q2), slack);
  Rng rng(9);
  const int trials = 2000;
  int bad = 0;
  for (int t = 0; t < trials; ++t) bad += scheffe(sample(p, n, rng), p, q2) == 2;
  EXPECT_LE(bad, static_cast<int>(trials * beta + 3.0 * std::sqrt(trials * beta * (1 - beta))));
}

TEST(LdpScheffe, NoiselessMatchesScheffe) {
  Rng gen(10), rng(11);
  auto q = separated_hypotheses(2, 6, 0.1, gen);
  for (int t = 0; t < 50; ++t) {
    auto x = sample(q[0], 40, gen);
    EXPECT_EQ(ldp_scheffe(x, q[0], q[1], kInf, rng), scheffe(x, q[0], q[1]));
  }
}

TEST(LdpScheffe, RealizableAndSingleUse) {
  Rng rng(12);
  DiscreteDistribution q1({0.4, 0.3, 0.2, 0.1}), q2({0.1, 0.2, 0.3, 0.4});
  // TV(q1, q2) = 0.4 here; shrink toward q1 to get 0.3.
  std::vector<double> mix(4);
  for (std::size_t i = 0; i < 4; ++i) mix[i] = 0.25 * q1[i] + 0.75 * q2[i];
  DiscreteDistribution q3(mix);
  ASSERT_NEAR(tv_distance(q1, q3), 0.3, 1e-12);
  int right = 0;
  for (int t = 0; t < 200; ++t) {
    ProtocolLog log(5000);
    right += ldp_scheffe(sample(q1, 5000, rng), q1, q3, 1.0, rng, &log) == 1;
    ASSERT_TRUE(log.each_user_at_most_once());
    ASSERT_EQ(log.total_messages(), 5000);
  }
  EXPECT_GE(right, 180);
  EXPECT_THROW(ldp_scheffe({}, q1, q3, 1.0, rng), GroupTooSmall);
}

TEST(Flatten, UniformHypotheses) {
  std::vector<DiscreteDistribution> q = {uniform(6), uniform(6)};
  auto f = flatten(q);
  EXPECT_EQ(f.n_prime, 6u);
  for (auto s : f.block_size) EXPECT_EQ(s, 1u);
  for (const auto& p : f.pushed) {
    for (double v : p.probs()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
  }
}

ExactRational exact_tv(const std::vector<ExactRational>& a, const std::vector<ExactRational>& b) {
  ExactRational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return s / 2;
}

void check_flattening(const std::vector<DiscreteDistribution>& q) {
  const std::size_t n = q[0].k(), k = q.size();
  auto sizes = flatten_block_sizes(q);
  const auto n_prime = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  EXPECT_GE(n_prime, n);
  EXPECT_LE(n_prime, (k + 1) * n);
  auto pushed = flatten_pushforward_exact(q);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& masses = pushed[i];
    // The inputs are doubles, so the exact total is 1/2 + (sum of q_i)/2.
    ExactRational expected = 0, total = 0;
    for (std::size_t a = 0; a < n; ++a) expected += ExactRational(q[i][a]);
    expected = (expected + 1) / 2;
    for (const auto& m : masses) {
      EXPECT_GE(m, ExactRational(1, 2 * static_cast<long long>(n_prime)));
      EXPECT_LE(m, ExactRational(1, static_cast<long long>(n)));
      total += m;
    }
    EXPECT_EQ(total, expected);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      std::vector<ExactRational> qi, qj;
      for (std::size_t a = 0; a < n; ++a) {
        qi.emplace_back(q[i][a]);
        qj.emplace_back(q[j][a]);
      }
      EXPECT_EQ(exact_tv(pushed[i], pushed[j]), exact_tv(qi, qj) / 2);
    }
  }
}

TEST(Flatten, RandomThreeOnFive) {
  Rng rng(13);
  check_flattening({dirichlet_draw(5, 1.0, rng), dirichlet_draw(5, 1.0, rng), dirichlet_draw(5, 1.0, rng)});
}

TEST(Flatten, HundredRandomSets) {
  Rng rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 1 + rng.below(8), n = 1 + rng.below(10);
    std::vector<DiscreteDistribution> q;
    for (std::size_t i = 0; i < k; ++i) q.push_back(dirichlet_draw(n, 0.5, rng));
    check_flattening(q);
  }
}

TEST(Flatten, MapSamplesPushforward) {
  Rng rng(15);
  std::vector<DiscreteDistribution> q = {zipf(5, 1.0), two_step(5)};
  auto f = flatten(q);
  std::vector<std::int64_t> counts(f.n_prime, 0);
  for (int t = 0; t < 100000; ++t) ++counts[static_cast<std::size_t>(f.map(q[1].draw(rng), rng) - 1)];
  EXPECT_GE(chi2_pvalue(counts, f.pushed[1].probs()), 1e-4);
}

TEST(LoglikSelect, TwoHypothesesIsLikelihoodRatio) {
  Rng gen(16), rng(17);
  auto q = separated_hypotheses(2, 8, 0.3, gen);
  int right = 0;
  for (int t = 0; t < 100; ++t) right += ldp_loglik_select(q, sample(q[1], 4000, gen), kInf, std::nullopt, rng) == 1;
  EXPECT_GE(right, 95);
}

TEST(LoglikSelect, RealizableEight) {
  Rng gen(18), rng(19);
  int right = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    auto q = separated_hypotheses(8, 12, 0.3, gen);
    const std::size_t truth = gen.below(8);
    ProtocolLog log;
    auto users = sample(q[truth], 8 * 50000, gen);
    right += ldp_loglik_select(q, users, 1.0, std::nullopt, rng, &log) == truth;
    EXPECT_TRUE(log.each_user_at_most_once());
    EXPECT_EQ(log.rounds(), 1);
  }
  EXPECT_GE(right, static_cast<int>(0.9 * trials));
  EXPECT_THROW(ldp_loglik_select(separated_hypotheses(3, 4, 0.1, gen), {1, 2}, 1.0, std::nullopt, rng), GroupTooSmall);
}

TEST(LoglikSelect, RangeAfterFlattening) {
  Rng rng(20);
  for (std::size_t k : {2u, 8u, 32u}) {
    std::vector<DiscreteDistribution> q;
    for (std::size_t i = 0; i < k; ++i) q.push_back(dirichlet_draw(10, 0.3, rng));
    // Masses lie in [1/(2N'), 1/N] with N' <= (k+1)N, so |ln(gamma/q')| <= ln(2(k+1)).
    EXPECT_LE(loglik_range(flatten(q)), std::log(2.0 * (k + 1)) + 1e-12);
  }
}

TEST(LdpTournament, GroupSizeAndBudget) {
  const double e = std::exp(1.0), c = (e + 1) / (e - 1);
  EXPECT_EQ(ldp_tournament_group_size(100, 1.0, 0.3),
            static_cast<std::size_t>(std::ceil(2 * c * c * std::log(2000.0) / 0.09)));
  for (std::size_t k : {16u, 64u, 256u, 4096u}) {
    const int t = static_cast<int>(std::ceil(std::log2(std::log2(static_cast<double>(k)))));
    const double ll = std::max(1.0, std::log(std::log(static_cast<double>(k))));
    EXPECT_LE(static_cast<double>(better_multi_round_max_queries(k, t)), 50000.0 * k * ll) << k;
  }
}

void run_ldp_tournament(std::size_t k, std::uint64_t seed) {
  Rng gen(seed), rng(seed + 1);
  const int t = static_cast<int>(std::ceil(std::log2(std::log2(static_cast<double>(k)))));
  const double eps = 1.0, alpha = 0.3;
  const std::size_t group = ldp_tournament_group_size(better_multi_round_max_queries(k, t), eps, alpha);
  const int trials = 40;
  int right = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto q = separated_hypotheses(k, 16, alpha, gen);
    const std::size_t truth = gen.below(k);
    auto users = sample(q[truth], group * static_cast<std::size_t>(better_multi_round_max_queries(k, t)), gen);
    ProtocolLog log;
    auto sel = ldp_select_tournament(q, users, eps, t, rng, group, &log);
    right += sel.chosen == truth;
    EXPECT_TRUE(log.each_user_at_most_once());
    EXPECT_LE(log.rounds(), t);
    EXPECT_EQ(log.total_messages(), static_cast<std::int64_t>(sel.users_used));
    EXPECT_EQ(sel.users_used, group * static_cast<std::size_t>(sel.transcript.total_queries));
  }
  EXPECT_GE(right, static_cast<int>(std::ceil(0.85 * trials))) << "k=" << k;
}

TEST(LdpTournament, RealizableEight) { run_ldp_tournament(8, 21); }

TEST(LdpTournament, RealizableSixteen) { run_ldp_tournament(16, 23); }

TEST(LdpTournament, TooFewUsers) {
  Rng gen(25), rng(26);
  auto q = separated_hypotheses(4, 6, 0.2, gen);
  EXPECT_THROW(ldp_select_tournament(q, sample(q[0], 3, gen), 1.0, 1, rng), GroupTooSmall);
}

}  // namespace
}  // namespace dpdi
