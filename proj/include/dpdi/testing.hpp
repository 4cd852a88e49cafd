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

// Private uniformity, identity and closeness testers.

#ifndef DPDI_TESTING_HPP_
#define DPDI_TESTING_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

using Rational = boost::rational<std::int64_t>;

// Constants of the testers and the shared sample-complexity multiplier.
// Defaults are the output of `dpdi calibrate` with seed 20260101 (see
// configs/constants.json).
struct TesterConstants {
  double c = 0.614890431271;
  double C1 = 3.21269802058;
  double C2 = 6.0;
  double multiplier = 2.5;
};

struct TesterConfig {
  std::size_t k = 0;
  double alpha = 0.1;
  PrivacyBudget budget = PrivacyBudget::pure(1.0);
  TesterConstants constants;
  bool use_poisson = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
    if (!(constants.c > 0.0 && constants.C1 > 0.0 && constants.C2 > 0.0)) {
      throw InvalidParameter("tester constants must be positive");
    }
  }
};

enum class Decision { kNullAccepted, kAlternative };

struct TestOutcome {
  Decision decision = Decision::kNullAccepted;
  double statistic_value = 0.0;
  int released_bit = 0;
};

inline TestOutcome outcome_from_bit(int bit, double statistic) {
  return {bit == 0 ? Decision::kNullAccepted : Decision::kAlternative, statistic, bit};
}

namespace internal {

inline double log_binomial_pmf(std::int64_t n, std::int64_t j, double p) {
  if (p <= 0.0) return j == 0 ? 0.0 : -kInf;
  if (p >= 1.0) return j == n ? 0.0 : -kInf;
  return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
         j * std::log(p) + (n - j) * std::log1p(-p);
}

// E|M/n - 1/k| for M ~ Bin(n, p), or M ~ Poisson(n p) when poisson is set.
inline double expected_abs_deviation(std::int64_t n, double p, std::size_t k, bool poisson) {
  const double target = 1.0 / static_cast<double>(k);
  const double nn = static_cast<double>(n);
  double acc = 0.0;
  if (!poisson) {
    for (std::int64_t j = 0; j <= n; ++j) {
      double w = std::exp(log_binomial_pmf(n, j, p));
      acc += w * std::fabs(j / nn - target);
    }
    return acc;
  }
  const double lambda = nn * p;
  const auto upper = static_cast<std::int64_t>(lambda + 12.0 * std::sqrt(lambda + 1.0) + 30.0);
  double mass = 0.0;
  for (std::int64_t j = 0; j <= upper; ++j) {
    double w = std::exp(j * std::log(lambda) - lambda - std::lgamma(j + 1.0));
    if (lambda == 0.0) w = j == 0 ? 1.0 : 0.0;
    mass += w;
    acc += w * std::fabs(j / nn - target);
  }
  // Remaining tail mass sits above the mean, where |j/n - 1/k| ~ j/n.
  acc += (1.0 - mass) * (upper / nn - target);
  return acc;
}

// Fixed-point resolution so that |value| * 2^shift stays below 2^52.
inline int fixed_shift(double magnitude) {
  int bits = static_cast<int>(std::ceil(std::log2(std::max(2.0, magnitude)))) + 2;
  return std::clamp(52 - bits, 0, 32);
}

}  // namespace internal

// Sum over x of |M_x k - n|; S = this / (2 n k).
inline std::int64_t unif_statistic_numerator(const Histogram& hist, std::size_t k) {
  if (hist.k() != k) throw DimensionMismatch("histogram alphabet differs from k");
  const auto kk = static_cast<std::int64_t>(k);
  std::int64_t num = 0;
  for (auto m : hist.counts) num += std::llabs(m * kk - hist.n);
  return num;
}

// S = 1/2 sum_x |M_x/n - 1/k| as an exact fraction.
inline Rational unif_statistic_S_exact(const Histogram& hist, std::size_t k) {
  if (hist.n <= 0) throw EmptyHistogram("uniformity statistic needs n >= 1");
  return Rational(unif_statistic_numerator(hist, k), 2 * hist.n * static_cast<std::int64_t>(k));
}

inline double unif_statistic_S(const Histogram& hist, std::size_t k) {
  if (hist.n <= 0) throw EmptyHistogram("uniformity statistic needs n >= 1");
  return static_cast<double>(unif_statistic_numerator(hist, k)) /
         (2.0 * static_cast<double>(hist.n) * static_cast<double>(k));
}

// E[S] under p with n samples (binomial marginals, exact).
inline double expected_unif_statistic(const DiscreteDistribution& p, std::int64_t n,
                                      bool poisson = false) {
  if (n <= 0) throw InvalidParameter("n must be positive");
  std::vector<std::pair<double, std::size_t>> groups;
  std::vector<double> masses(p.probs());
  std::sort(masses.begin(), masses.end());
  for (double m : masses) {
    if (!groups.empty() && groups.back().first == m) {
      ++groups.back().second;
    } else {
      groups.emplace_back(m, 1);
    }
  }
  double total = 0.0;
  for (auto [mass, count] : groups) {
    total += static_cast<double>(count) * internal::expected_abs_deviation(n, mass, p.k(), poisson);
  }
  return 0.5 * total;
}

// mu(U[k]) = E_U[S] for n samples.
inline double uniform_mean_S(std::size_t k, std::int64_t n, bool poisson = false) {
  if (k == 0 || n <= 0) throw InvalidParameter("uniform_mean_S needs k, n >= 1");
  const double kk = static_cast<double>(k);
  if (!poisson && static_cast<std::size_t>(n) <= k) return std::pow(1.0 - 1.0 / kk, static_cast<double>(n));
  return 0.5 * kk * internal::expected_abs_deviation(n, 1.0 / kk, k, poisson);
}

enum class UnifRegime { kSparse, kMiddle, kDense };

inline UnifRegime unif_regime(std::size_t k, std::int64_t n, double alpha) {
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  if (nn <= kk) return UnifRegime::kSparse;
  if (nn <= kk / (alpha * alpha)) return UnifRegime::kMiddle;
  return UnifRegime::kDense;
}

// The separation term min{n^2/k^2, sqrt(n/k), 1/alpha} matching the regime.
inline double unif_separation_shape(std::size_t k, std::int64_t n, double alpha) {
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  switch (unif_regime(k, n, alpha)) {
    case UnifRegime::kSparse: return nn * nn / (kk * kk);
    case UnifRegime::kMiddle: return std::sqrt(nn / kk);
    default: return 1.0 / alpha;
  }
}

// Regime-normalized statistic Z.  Evaluated on a dyadic fixed-point grid:
// the data-dependent part is floored onto the grid and the offset rounded,
// so a substitution moves Z by at most 1 exactly, also in floating point.
inline double unif_statistic_Z(const Histogram& hist, const TesterConfig& cfg) {
  cfg.validate();
  const std::size_t k = cfg.k;
  if (k < 2) throw InvalidParameter("uniformity statistic needs k >= 2");
  const std::int64_t n = hist.n;
  if (n <= 0) throw EmptyHistogram("uniformity statistic needs n >= 1");
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  const double mu = uniform_mean_S(k, n, cfg.use_poisson);
  const double c = cfg.constants.c, a2 = cfg.alpha * cfg.alpha;
  const std::int64_t num = unif_statistic_numerator(hist, k);
  // Z = scale * S - offset with scale * S = num / denom.
  double scale = 0.0;
  std::int64_t denom = 0;
  switch (unif_regime(k, n, cfg.alpha)) {
    case UnifRegime::kSparse:
      scale = kk;
      denom = 2 * n;
      break;
    case UnifRegime::kMiddle:
    case UnifRegime::kDense:
      scale = nn;
      denom = 2 * static_cast<std::int64_t>(k);
      break;
  }
  const double offset = scale * (mu + 0.5 * c * a2 * unif_separation_shape(k, n, cfg.alpha));
  const int shift = internal::fixed_shift(std::max(scale, std::fabs(offset)) + 1.0);
  const auto one = static_cast<__int128>(1) << shift;
  const auto data = static_cast<std::int64_t>((static_cast<__int128>(num) * one) / denom);
  const auto off = static_cast<std::int64_t>(std::llround(std::ldexp(offset, shift)));
  return std::ldexp(static_cast<double>(data - off), -shift);
}

inline double unif_statistic_Z(const SampleSet& samples, const TesterConfig& cfg) {
  return unif_statistic_Z(Histogram::from_samples(samples, cfg.k), cfg);
}

inline TestOutcome uniformity_test(const SampleSet& samples, const TesterConfig& cfg, Rng& rng) {
  const double z = unif_statistic_Z(samples, cfg);
  const double eps = cfg.budget.effective_epsilon();
  if (!(eps > 0.0)) throw InvalidBudget("epsilon + delta must be positive");
  return outcome_from_bit(sigmoid_release(z, eps, rng), z);
}

// Bucketing map F_q onto [6k].  q' = (q + U[k])/2; symbol i owns
// m_i = floor(6k q'(i)) buckets and the leftover buckets form a shared pool.
class IdentityReduction {
 public:
  explicit IdentityReduction(const DiscreteDistribution& q) : k_(q.k()) {
    const double kk = static_cast<double>(k_);
    const std::size_t buckets = 6 * k_;
    mixed_.resize(k_);
    start_.resize(k_);
    size_.resize(k_);
    own_prob_.resize(k_);
    std::size_t next = 0;
    for (std::size_t i = 0; i < k_; ++i) {
      mixed_[i] = 0.5 * q[i] + 0.5 / kk;
      double target = 6.0 * kk * mixed_[i];
      auto m = static_cast<std::size_t>(std::floor(target + 1e-9));
      m = std::min(m, buckets - next);
      start_[i] = next;
      size_[i] = m;
      own_prob_[i] = std::min(1.0, static_cast<double>(m) / target);
      next += m;
    }
    pool_start_ = next;
    pool_size_ = buckets - next;
  }

  std::size_t output_k() const { return 6 * k_; }

  // Symbol in {1..6k}.
  int map(int symbol, Rng& rng) const {
    std::size_t x = static_cast<std::size_t>(symbol - 1);
    if (rng.bernoulli(0.5)) x = rng.below(k_);
    if (pool_size_ == 0 || rng.bernoulli(own_prob_[x])) {
      return static_cast<int>(start_[x] + rng.below(size_[x])) + 1;
    }
    return static_cast<int>(pool_start_ + rng.below(pool_size_)) + 1;
  }

  // Exact law of the output when inputs are drawn from p.
  DiscreteDistribution pushforward(const DiscreteDistribution& p) const {
    if (p.k() != k_) throw DimensionMismatch("pushforward alphabet differs from q");
    std::vector<double> out(6 * k_, 0.0);
    const double kk = static_cast<double>(k_);
    double pool_mass = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      double mass = 0.5 * p[i] + 0.5 / kk;
      double own = pool_size_ == 0 ? 1.0 : own_prob_[i];
      for (std::size_t b = 0; b < size_[i]; ++b) out[start_[i] + b] += mass * own / size_[i];
      pool_mass += mass * (1.0 - own);
    }
    for (std::size_t b = 0; b < pool_size_; ++b) out[pool_start_ + b] += pool_mass / pool_size_;
    return normalized(std::move(out));
  }

  // First output bucket of symbol i in {1..k} and the number of buckets it owns.
  std::pair<std::size_t, std::size_t> block(int symbol) const {
    auto i = static_cast<std::size_t>(symbol - 1);
    return {start_[i] + 1, size_[i]};
  }

 private:
  std::size_t k_;
  std::vector<double> mixed_, own_prob_;
  std::vector<std::size_t> start_, size_;
  std::size_t pool_start_ = 0, pool_size_ = 0;
};

inline SampleSet identity_reduce(const DiscreteDistribution& q, const SampleSet& samples, Rng& rng) {
  IdentityReduction f(q);
  SampleSet out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] < 1 || static_cast<std::size_t>(samples[i]) > q.k()) {
      throw InvalidParameter("sample outside the alphabet of q");
    }
    out[i] = f.map(samples[i], rng);
  }
  return out;
}

inline TestOutcome identity_test(const DiscreteDistribution& q, const SampleSet& samples,
                                 const TesterConfig& cfg, Rng& rng) {
  cfg.validate();
  if (q.k() == 1) return {Decision::kNullAccepted, 0.0, 0};
  TesterConfig reduced = cfg;
  reduced.k = 6 * q.k();
  reduced.alpha = cfg.alpha / 3.0;
  return uniformity_test(identity_reduce(q, samples, rng), reduced, rng);
}

inline double closeness_statistic_Z(const Histogram& x, const Histogram& x2, const Histogram& y,
                                    const Histogram& y2) {
  const std::size_t k = x.k();
  if (x2.k() != k || y.k() != k || y2.k() != k) throw DimensionMismatch("closeness histograms differ in k");
  std::int64_t z = 0;
  for (std::size_t i = 0; i < k; ++i) {
    z += std::llabs(x.counts[i] - y.counts[i]) + std::llabs(x2.counts[i] - y2.counts[i]) -
         std::llabs(x.counts[i] - x2.counts[i]) - std::llabs(y.counts[i] - y2.counts[i]);
  }
  return static_cast<double>(z);
}

// The four sample sets the closeness statistic is computed on, and the
// per-set size n used for normalization.
struct ClosenessSplit {
  Histogram x, x2, y, y2;
  double n = 0.0;
};

inline ClosenessSplit closeness_split(const SampleSet& p_samples, const SampleSet& q_samples,
                                      std::size_t k, bool poisson, Rng& rng) {
  if (p_samples.size() < 2 || q_samples.size() < 2) {
    throw InsufficientSamples("closeness test needs at least 2 samples per source");
  }
  ClosenessSplit split;
  if (poisson) {
    // Thinning a Poisson sample by fair coins yields two independent halves.
    SampleSet a, b, c, d;
    for (int s : p_samples) (rng.bernoulli(0.5) ? a : b).push_back(s);
    for (int s : q_samples) (rng.bernoulli(0.5) ? c : d).push_back(s);
    split.x = Histogram::from_samples(a, k);
    split.x2 = Histogram::from_samples(b, k);
    split.y = Histogram::from_samples(c, k);
    split.y2 = Histogram::from_samples(d, k);
    split.n = 0.25 * static_cast<double>(p_samples.size() + q_samples.size());
    return split;
  }
  const std::size_t half = std::min(p_samples.size(), q_samples.size()) / 2;
  auto take = [&](const SampleSet& s, std::size_t from) {
    return Histogram::from_samples(SampleSet(s.begin() + static_cast<std::ptrdiff_t>(from),
                                             s.begin() + static_cast<std::ptrdiff_t>(from + half)),
                                   k);
  };
  split.x = take(p_samples, 0);
  split.x2 = take(p_samples, half);
  split.y = take(q_samples, 0);
  split.y2 = take(q_samples, half);
  split.n = static_cast<double>(half);
  return split;
}

// min{n alpha, n^2 alpha^2/k, n^{3/2} alpha^2/sqrt(k)}, n per sample set.
inline double closeness_expectation_shape(double n, std::size_t k, double alpha) {
  const double kk = static_cast<double>(k), a2 = alpha * alpha;
  return std::min({n * alpha, n * n * a2 / kk, std::pow(n, 1.5) * a2 / std::sqrt(kk)});
}

// E[Z] >= kClosenessExpectationConstant * shape when TV(p, q) >= alpha.
// Output of calibrate_closeness_expectation with seed 20260101.
inline constexpr double kClosenessExpectationConstant = 1.51635220126;

// One substitution moves Z by up to 4, so Z' = (Z - C1 sqrt(n) - C2/eps)/4
// has sensitivity 1 and is released through the sigmoid.
inline TestOutcome closeness_test(const SampleSet& p_samples, const SampleSet& q_samples,
                                  const TesterConfig& cfg, Rng& rng) {
  cfg.validate();
  const double eps = cfg.budget.effective_epsilon();
  if (!(eps > 0.0)) throw InvalidBudget("epsilon + delta must be positive");
  ClosenessSplit s = closeness_split(p_samples, q_samples, cfg.k, cfg.use_poisson, rng);
  const double z = closeness_statistic_Z(s.x, s.x2, s.y, s.y2);
  const double shift = cfg.constants.C1 * std::sqrt(s.n) + (std::isinf(eps) ? 0.0 : cfg.constants.C2 / eps);
  const double z_prime = (z - shift) / 4.0;
  return outcome_from_bit(sigmoid_release(z_prime, eps, rng), z_prime);
}

enum class TestTask { UT, IT, CT };

enum class UtBranch { kSqrtK, kCubeRoot, kInverse };

// Which of the three private terms attains the max in the UT/IT formula.
inline UtBranch ut_private_branch(double k, double alpha, double eps) {
  const double a = std::sqrt(k) / (alpha * std::sqrt(eps));
  const double b = std::cbrt(k) / (std::pow(alpha, 4.0 / 3.0) * std::pow(eps, 2.0 / 3.0));
  const double c = 1.0 / (alpha * eps);
  if (c >= a && c >= b) return UtBranch::kInverse;
  return a >= b ? UtBranch::kSqrtK : UtBranch::kCubeRoot;
}

// Formula value without the multiplier.
inline double sample_complexity_formula(TestTask task, double k, double alpha, const PrivacyBudget& budget) {
  if (!(k >= 1.0)) throw InvalidParameter("k must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  const double eps = budget.effective_epsilon();
  if (!(eps > 0.0)) throw InvalidParameter("epsilon + delta must be positive");
  const double base = std::sqrt(k) / (alpha * alpha);
  double priv_sqrt = 0.0, priv_cube = 0.0, priv_inv = 0.0;
  if (!std::isinf(eps)) {
    priv_sqrt = std::sqrt(k) / (alpha * std::sqrt(eps));
    priv_cube = std::cbrt(k) / (std::pow(alpha, 4.0 / 3.0) * std::pow(eps, 2.0 / 3.0));
    priv_inv = 1.0 / (alpha * eps);
  }
  if (task == TestTask::CT) {
    return base + std::pow(k, 2.0 / 3.0) / std::pow(alpha, 4.0 / 3.0) + priv_inv + priv_sqrt + priv_cube;
  }
  return base + std::max({priv_sqrt, priv_cube, priv_inv});
}

inline std::int64_t sample_complexity(TestTask task, double k, double alpha, const PrivacyBudget& budget,
                                      const TesterConstants& constants = {}) {
  return static_cast<std::int64_t>(
      std::ceil(constants.multiplier * sample_complexity_formula(task, k, alpha, budget)));
}

// Samples identity_test needs at the constants: the uniformity tester runs on
// [6k] at radius alpha/3.
inline std::int64_t identity_sample_size(std::size_t k, double alpha, const PrivacyBudget& budget,
                                         const TesterConstants& constants = {}) {
  return sample_complexity(TestTask::UT, 6.0 * static_cast<double>(k), alpha / 3.0, budget, constants);
}

}  // namespace dpdi

#endif  // DPDI_TESTING_HPP_
