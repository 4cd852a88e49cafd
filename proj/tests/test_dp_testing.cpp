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
#include <vector>

#include <gtest/gtest.h>

#include "dpdi/distribution.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/testing.hpp"
#include "stat_helpers.hpp"

namespace dpdi {
namespace {

using testutil::chi2_pvalue;

TesterConfig config(std::size_t k, double alpha, double eps) {
  TesterConfig c;
  c.k = k;
  c.alpha = alpha;
  c.budget = PrivacyBudget::pure(eps);
  return c;
}

TEST(UnifStatistic, Examples) {
  EXPECT_EQ(unif_statistic_S(Histogram({1, 1, 1, 1}), 4), 0.0);
  EXPECT_EQ(unif_statistic_S(Histogram({4, 0, 0, 0}), 4), 0.75);
  EXPECT_EQ(unif_statistic_S_exact(Histogram({4, 0, 0, 0}), 4), Rational(3, 4));
}

TEST(UnifStatistic, UnseenIdentity) {
  for (std::size_t k = 2; k <= 5; ++k) {
    for (std::size_t n = 1; n <= k; ++n) {
      SampleSet x(n, 1);
      while (true) {
        Histogram h = Histogram::from_samples(x, k);
        const auto phi0 = static_cast<std::int64_t>(k) - h.distinct();
        EXPECT_EQ(unif_statistic_S_exact(h, k), Rational(phi0, static_cast<std::int64_t>(k)));
        std::size_t j = 0;
        while (j < n && static_cast<std::size_t>(x[j]) == k) x[j++] = 1;
        if (j == n) break;
        ++x[j];
      }
    }
  }
}

TEST(UnifStatistic, ZMeansAcrossRegime) {
  const std::size_t k = 100;
  const std::size_t n = 50;
  const double alpha = 0.25;
  TesterConfig cfg = config(k, alpha, 1.0);
  const double bound = 0.5 * cfg.constants.c * alpha * alpha * n * n / static_cast<double>(k);
  Rng rng(12);
  const int trials = 20000;
  double s0 = 0.0, s0sq = 0.0, s1 = 0.0, s1sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    double z0 = unif_statistic_Z(sample(uniform(k), n, rng), cfg);
    double z1 = unif_statistic_Z(sample(paninski(k, alpha, rng), n, rng), cfg);
    s0 += z0;
    s0sq += z0 * z0;
    s1 += z1;
    s1sq += z1 * z1;
  }
  const double m0 = s0 / trials, m1 = s1 / trials;
  const double se0 = std::sqrt((s0sq / trials - m0 * m0) / trials);
  const double se1 = std::sqrt((s1sq / trials - m1 * m1) / trials);
  EXPECT_LE(m0, -bound + 3.0 * se0);
  EXPECT_GE(m1, bound - 3.0 * se1);
}

TEST(UnifStatistic, ExhaustiveSensitivity) {
  for (double alpha : {0.1, 0.5}) {
    TesterConfig cfg = config(3, alpha, 1.0);
    auto z = [&](const SampleSet& x) { return unif_statistic_Z(x, cfg); };
    EXPECT_LE(sensitivity_exhaustive(z, 3, 4).delta_f, 1.0);
  }
}

TEST(UniformityTest, ErrorRates) {
  const std::size_t k = 100;
  const double alpha = 0.25, eps = 1.0;
  TesterConfig cfg = config(k, alpha, eps);
  const auto n = static_cast<std::size_t>(sample_complexity(TestTask::UT, k, alpha, cfg.budget, cfg.constants));
  Rng rng(21);
  int null_err = 0, far_err = 0;
  for (int t = 0; t < 200; ++t) {
    null_err += uniformity_test(sample(uniform(k), n, rng), cfg, rng).released_bit;
    far_err += 1 - uniformity_test(sample(paninski(k, alpha, rng), n, rng), cfg, rng).released_bit;
  }
  EXPECT_LE(null_err, 20);
  EXPECT_LE(far_err, 20);
}

TEST(UniformityTest, DeterministicWithoutNoise) {
  TesterConfig cfg = config(50, 0.3, kInf);
  Rng rng(1);
  auto x = sample(uniform(50), 2000, rng);
  auto y = sample(paninski(50, 0.3, rng), 2000, rng);
  for (int rep = 0; rep < 50; ++rep) {
    EXPECT_EQ(uniformity_test(x, cfg, rng).decision, Decision::kNullAccepted);
    EXPECT_EQ(uniformity_test(y, cfg, rng).decision, Decision::kAlternative);
  }
}

TEST(IdentityReduce, UniformReferenceGivesUniformOutput) {
  const std::size_t k = 10;
  Rng rng(5);
  auto out = identity_reduce(uniform(k), sample(uniform(k), 100000, rng), rng);
  auto h = Histogram::from_samples(out, 6 * k);
  EXPECT_GE(chi2_pvalue(h.counts, uniform(6 * k).probs()), 1e-4);
}

TEST(IdentityReduce, PushforwardContract) {
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t k = 2 + rng.below(12);
    auto q = dirichlet_draw(k, 0.7, rng);
    IdentityReduction f(q);
    auto u = f.pushforward(q);
    for (double v : u.probs()) EXPECT_NEAR(v, 1.0 / (6.0 * k), 1e-12);
    auto p = dirichlet_draw(k, 0.7, rng);
    EXPECT_GE(tv_distance(f.pushforward(p), uniform(6 * k)), tv_distance(p, q) / 3.0 - 1e-12);
  }
}

TEST(IdentityReduce, PointMassBucket) {
  const std::size_t k = 5;
  DiscreteDistribution q({0.0, 0.0, 1.0, 0.0, 0.0});
  IdentityReduction f(q);
  auto [start, size] = f.block(3);
  ASSERT_GT(size, 1u);
  Rng rng(7);
  auto out = identity_reduce(q, SampleSet(200000, 3), rng);
  std::vector<std::int64_t> in_block(size, 0);
  for (int s : out) {
    auto b = static_cast<std::size_t>(s);
    if (b >= start && b < start + size) ++in_block[b - start];
  }
  EXPECT_GE(chi2_pvalue(in_block, std::vector<double>(size, 1.0 / size)), 1e-4);
  // The law of the output is the pushforward of the point mass.
  auto h = Histogram::from_samples(out, 6 * k);
  EXPECT_GE(chi2_pvalue(h.counts, f.pushforward(q).probs()), 1e-4);
}

TEST(IdentityReduce, Deterministic) {
  Rng a(9), b(9), data(3);
  auto q = zipf(8, 1.0);
  auto x = sample(q, 500, data);
  EXPECT_EQ(identity_reduce(q, x, a), identity_reduce(q, x, b));
}

TEST(IdentityTest, Decisions) {
  const std::size_t k = 20;
  const double alpha = 0.3;
  TesterConfig cfg = config(k, alpha, 1.0);
  const auto n = static_cast<std::size_t>(identity_sample_size(k, alpha, cfg.budget, cfg.constants));
  Rng rng(31);
  int null_err = 0, far_err = 0;
  for (int t = 0; t < 100; ++t) {
    null_err += identity_test(uniform(k), sample(uniform(k), n, rng), cfg, rng).released_bit;
    far_err += 1 - identity_test(uniform(k), sample(paninski(k, alpha, rng), n, rng), cfg, rng).released_bit;
  }
  EXPECT_LE(null_err, 10);
  EXPECT_LE(far_err, 10);
  TesterConfig one = config(1, alpha, 1.0);
  EXPECT_EQ(identity_test(uniform(1), SampleSet(10, 1), one, rng).decision, Decision::kNullAccepted);
}

double closeness_direct(const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& x2,
                        const std::vector<std::int64_t>& y, const std::vector<std::int64_t>& y2) {
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    z += std::abs(static_cast<double>(x[i] - y[i])) + std::abs(static_cast<double>(x2[i] - y2[i])) -
         std::abs(static_cast<double>(x[i] - x2[i])) - std::abs(static_cast<double>(y[i] - y2[i]));
  }
  return z;
}

TEST(ClosenessStatistic, Examples) {
  Histogram h({3, 1, 0, 2});
  EXPECT_EQ(closeness_statistic_Z(h, h, h, h), 0.0);
  Histogram x({4, 2, 0, 0}), y({0, 0, 5, 1});
  EXPECT_EQ(closeness_statistic_Z(x, x, y, y), closeness_direct(x.counts, x.counts, y.counts, y.counts));
  EXPECT_EQ(closeness_statistic_Z(x, x, y, y), 24.0);
  EXPECT_THROW(closeness_statistic_Z(x, x, y, Histogram({1, 1})), DimensionMismatch);
}

TEST(ClosenessStatistic, SubstitutionWitness) {
  // Moving one Y sample from symbol 1 to 2 shifts two counts of Y, and each
  // count enters two terms.
  Histogram x({1, 0}), y2({0, 1});
  EXPECT_EQ(closeness_statistic_Z(x, x, Histogram({1, 0}), y2), 0.0);
  EXPECT_EQ(closeness_statistic_Z(x, x, Histogram({0, 1}), y2), 4.0);
}

TEST(ClosenessStatistic, ExhaustiveSensitivity) {
  auto part = [](const SampleSet& s, std::size_t i) {
    return Histogram::from_samples(SampleSet(s.begin() + 3 * i, s.begin() + 3 * i + 3), 3);
  };
  auto z = [&](const SampleSet& s) { return closeness_statistic_Z(part(s, 0), part(s, 1), part(s, 2), part(s, 3)); };
  EXPECT_LE(sensitivity_exhaustive(z, 3, 12).delta_f, 4.0);
  // The released Z' divides by 4 and so moves by at most 1.
  auto z_prime = [&](const SampleSet& s) { return (z(s) - 3.0 - 6.0) / 4.0; };
  EXPECT_LE(sensitivity_exhaustive(z_prime, 3, 12).delta_f, 1.0);
}

TEST(ClosenessTest, NullAndFar) {
  const std::size_t k = 100;
  const double alpha = 0.3;
  TesterConfig cfg = config(k, alpha, 1.0);
  const auto n = static_cast<std::size_t>(sample_complexity(TestTask::CT, k, alpha, cfg.budget, cfg.constants));
  Rng rng(41);
  const int trials = 400;
  int accept = 0, big_dev = 0;
  double zsum = 0.0, zsq = 0.0, far_sum = 0.0, per_set = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto x = sample(uniform(k), n, rng), y = sample(uniform(k), n, rng);
    accept += closeness_test(x, y, cfg, rng).released_bit == 0;
    auto s = closeness_split(x, y, k, false, rng);
    const double z = closeness_statistic_Z(s.x, s.x2, s.y, s.y2);
    zsum += z;
    zsq += z * z;
    big_dev += std::fabs(z) >= cfg.constants.C1 * std::sqrt(s.n);
    auto f = closeness_split(sample(uniform(k), n, rng), sample(paninski(k, alpha, rng), n, rng), k, false, rng);
    far_sum += closeness_statistic_Z(f.x, f.x2, f.y, f.y2);
    per_set = f.n;
  }
  const double mean = zsum / trials, se = std::sqrt((zsq / trials - mean * mean) / trials);
  EXPECT_NEAR(mean, 0.0, 3.0 * se);
  EXPECT_GE(accept, static_cast<int>(0.9 * trials));
  EXPECT_LE(big_dev, static_cast<int>(trials * (0.05 + 3.0 * std::sqrt(0.05 * 0.95 / trials))));
  EXPECT_GE(far_sum / trials, kClosenessExpectationConstant * closeness_expectation_shape(per_set, k, alpha));
}

TEST(ClosenessTest, FarExpectationHeldOut) {
  // Points outside the calibration grid.
  Rng rng(43);
  for (auto [k, alpha] : {std::pair<std::size_t, double>{60, 0.35}, {400, 0.25}}) {
    const auto n = static_cast<std::size_t>(sample_complexity(TestTask::CT, k, alpha, PrivacyBudget::pure(1.0)));
    double sum = 0.0, per_set = 0.0;
    for (int t = 0; t < 300; ++t) {
      auto f = closeness_split(sample(uniform(k), n, rng), sample(paninski(k, alpha, rng), n, rng), k, false, rng);
      sum += closeness_statistic_Z(f.x, f.x2, f.y, f.y2);
      per_set = f.n;
    }
    EXPECT_GE(sum / 300.0, kClosenessExpectationConstant * closeness_expectation_shape(per_set, k, alpha));
  }
}

TEST(ClosenessTest, PoissonSplit) {
  Rng rng(2);
  auto p = poissonized_sample(uniform(10), 100, rng), q = poissonized_sample(uniform(10), 100, rng);
  auto s = closeness_split(p, q, 10, true, rng);
  EXPECT_EQ(s.x.n + s.x2.n, static_cast<std::int64_t>(p.size()));
  EXPECT_EQ(s.y.n + s.y2.n, static_cast<std::int64_t>(q.size()));
  EXPECT_DOUBLE_EQ(s.n, 0.25 * static_cast<double>(p.size() + q.size()));
}

TEST(ClosenessTest, InsufficientSamples) {
  Rng rng(1);
  EXPECT_THROW(closeness_test({1}, {1, 2}, config(3, 0.2, 1.0), rng), InsufficientSamples);
}

TEST(SampleComplexity, NonPrivateLimit) {
  TesterConstants c;
  const double k = 400, alpha = 0.2;
  EXPECT_EQ(sample_complexity(TestTask::UT, k, alpha, PrivacyBudget::none(), c),
            static_cast<std::int64_t>(std::ceil(c.multiplier * std::sqrt(k) / (alpha * alpha))));
}

TEST(SampleComplexity, InverseBranchPredicate) {
  // The 1/(alpha eps) term is the largest of the three exactly when
  // k <= alpha / eps: both other terms then fall below it.
  for (double k : {1.0, 10.0, 1e3, 1e6}) {
    for (double alpha : {0.05, 0.1, 0.5}) {
      for (double eps : {2e-6, 3e-4, 7e-2, 1.3}) {
        const bool expected = k <= alpha / eps;
        EXPECT_EQ(ut_private_branch(k, alpha, eps) == UtBranch::kInverse, expected)
            << "k=" << k << " alpha=" << alpha << " eps=" << eps;
      }
    }
  }
  EXPECT_EQ(ut_private_branch(1e6, 0.1, 1.0), UtBranch::kSqrtK);
  EXPECT_EQ(ut_private_branch(1e6, 0.1, 1e-6), UtBranch::kCubeRoot);
}

TEST(SampleComplexity, ClosenessDominatesUniformity) {
  for (double k : {2.0, 50.0, 1e4, 1e7}) {
    for (double alpha : {0.01, 0.1, 0.9}) {
      for (double eps : {1e-3, 0.1, 1.0, 10.0, kInf}) {
        PrivacyBudget b = PrivacyBudget::pure(eps);
        EXPECT_GE(sample_complexity(TestTask::CT, k, alpha, b), sample_complexity(TestTask::UT, k, alpha, b));
      }
    }
  }
  EXPECT_THROW(sample_complexity(TestTask::UT, 10, 1.5, PrivacyBudget::pure(1.0)), InvalidParameter);
}

TEST(SampleComplexity, ApproximateBudgetSubstitution) {
  EXPECT_EQ(sample_complexity(TestTask::UT, 100, 0.2, PrivacyBudget::approx(0.5, 0.25)),
            sample_complexity(TestTask::UT, 100, 0.2, PrivacyBudget::pure(0.75)));
}

}  // namespace
}  // namespace dpdi
