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

// Private estimators of entropy, support coverage and support size.

#ifndef DPDI_PROPERTIES_HPP_
#define DPDI_PROPERTIES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

enum class EstimateRegime { kEmpirical, kPolynomial, kBatch, kSgt, kSparse, kDense };

inline const char* to_string(EstimateRegime r) {
  switch (r) {
    case EstimateRegime::kEmpirical: return "empirical";
    case EstimateRegime::kPolynomial: return "polynomial";
    case EstimateRegime::kBatch: return "batch";
    case EstimateRegime::kSgt: return "sgt";
    case EstimateRegime::kSparse: return "sparse";
    default: return "dense";
  }
}

struct PropertyEstimate {
  double value = 0.0;
  double noise_scale = 0.0;
  EstimateRegime regime = EstimateRegime::kEmpirical;
};

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

inline std::size_t alphabet_of(const SampleSet& samples) {
  int top = 0;
  for (int s : samples) {
    if (s < 1) throw InvalidParameter("symbols must be >= 1");
    top = std::max(top, s);
  }
  return static_cast<std::size_t>(std::max(top, 1));
}

// ---- Entropy ----

inline double entropy_empirical(const Histogram& hist) {
  if (hist.n <= 0) throw EmptyHistogram("entropy of an empty histogram");
  const double n = static_cast<double>(hist.n);
  double h = 0.0;
  for (auto c : hist.counts) {
    if (c > 0) {
      double f = static_cast<double>(c) / n;
      h -= f * std::log(f);
    }
  }
  return h;
}

inline SensitivityBound entropy_sensitivity(std::int64_t n) {
  if (n <= 0) throw InvalidParameter("entropy sensitivity needs n >= 1");
  const double nn = static_cast<double>(n);
  return {2.0 * std::max(1.0, std::log(nn)) / nn, n};
}

namespace internal {

inline PropertyEstimate entropy_private_empirical_once(const SampleSet& samples,
                                                       const PrivacyBudget& budget, Rng& rng) {
  if (samples.empty()) throw EmptyHistogram("no samples");
  Histogram h = Histogram::from_samples(samples, alphabet_of(samples));
  SensitivityBound sens = entropy_sensitivity(h.n);
  PropertyEstimate est;
  est.noise_scale = laplace_scale(sens.delta_f, budget);
  est.value = laplace_mechanism(entropy_empirical(h), sens, budget, rng);
  est.regime = EstimateRegime::kEmpirical;
  return est;
}

}  // namespace internal

// Empirical entropy plus Laplace noise.  With median_of_three the samples are
// split into three disjoint thirds, each released at the full budget.
inline PropertyEstimate entropy_private_empirical(const SampleSet& samples, const PrivacyBudget& budget,
                                                  Rng& rng, bool median_of_three = false) {
  if (!median_of_three) return internal::entropy_private_empirical_once(samples, budget, rng);
  const std::size_t part = samples.size() / 3;
  if (part == 0) throw InsufficientSamples("median of three needs at least 3 samples");
  std::vector<PropertyEstimate> runs;
  for (std::size_t j = 0; j < 3; ++j) {
    SampleSet chunk(samples.begin() + static_cast<std::ptrdiff_t>(j * part),
                    samples.begin() + static_cast<std::ptrdiff_t>((j + 1) * part));
    runs.push_back(internal::entropy_private_empirical_once(chunk, budget, rng));
  }
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  return runs[1];
}

// Monomial coefficients b_0..b_L of the Chebyshev interpolant of -y ln y on [0, 1].
inline std::vector<double> neg_xlogx_chebyshev(int degree) {
  if (degree < 1) throw InvalidParameter("degree must be >= 1");
  const int m = degree + 1;
  using ld = long double;
  const ld pi = std::numbers::pi_v<long double>;
  std::vector<ld> cheb(static_cast<std::size_t>(m), 0.0L);
  for (int j = 0; j < m; ++j) {
    ld acc = 0.0L;
    for (int node = 0; node < m; ++node) {
      ld theta = pi * (2 * node + 1) / (2.0L * m);
      ld y = (1.0L + std::cos(theta)) / 2.0L;
      ld f = y > 0 ? -y * std::log(y) : 0.0L;
      acc += f * std::cos(j * theta);
    }
    cheb[static_cast<std::size_t>(j)] = 2.0L * acc / m;
  }
  cheb[0] /= 2.0L;
  // T_j(2y - 1) in the monomial basis of y.
  std::vector<ld> prev(static_cast<std::size_t>(m), 0.0L), cur(static_cast<std::size_t>(m), 0.0L);
  std::vector<ld> out(static_cast<std::size_t>(m), 0.0L);
  prev[0] = 1.0L;
  cur[0] = -1.0L;
  if (m > 1) cur[1] = 2.0L;
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] += cheb[0] * prev[static_cast<std::size_t>(i)];
  for (int j = 1; j < m; ++j) {
    for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] += cheb[static_cast<std::size_t>(j)] * cur[static_cast<std::size_t>(i)];
    std::vector<ld> next(static_cast<std::size_t>(m), 0.0L);
    for (int i = 0; i < m; ++i) {
      auto ui = static_cast<std::size_t>(i);
      next[ui] -= 2.0L * cur[ui] + prev[ui];
      if (i + 1 < m) next[ui + 1] += 4.0L * cur[ui];
    }
    prev = cur;
    cur = next;
  }
  return std::vector<double>(out.begin(), out.end());
}

// Per-symbol contribution table of the polynomial entropy estimator.
// Counts up to the threshold use an unbiased estimate of the polynomial
// approximation of -x ln x on [0, a]; larger counts use the plug-in value
// plus the Miller-Madow correction.  Increments are clamped to
// +-max_increment so that one substitution moves the sum by at most
// 2 * max_increment.
struct PolyEntropyTable {
  std::vector<double> g;  // g[N], N = 0..n
  int degree = 0;
  std::int64_t threshold = 0;
  double interval = 0.0;
  double raw_max_increment = 0.0;
  double max_increment = 0.0;
};

inline int poly_entropy_degree(std::size_t k, double degree_factor = 1.2) {
  return std::max(1, static_cast<int>(std::floor(degree_factor * std::log(static_cast<double>(std::max<std::size_t>(k, 2))))));
}

inline PolyEntropyTable poly_entropy_table(std::int64_t n, std::size_t k, double degree_factor = 1.2,
                                           std::optional<double> clamp = std::nullopt) {
  if (n <= 0) throw InvalidParameter("n must be positive");
  PolyEntropyTable t;
  t.degree = poly_entropy_degree(k, degree_factor);
  t.threshold = 2 * t.degree;
  const double nn = static_cast<double>(n);
  t.interval = std::min(1.0, 2.0 * static_cast<double>(t.threshold) / nn);
  const double a = t.interval;
  const std::vector<double> b = neg_xlogx_chebyshev(t.degree);
  std::vector<double> raw(static_cast<std::size_t>(n) + 1);
  for (std::int64_t count = 0; count <= n; ++count) {
    double value;
    if (count <= t.threshold) {
      // sum_j b_j a^{1-j} (N)_j/(n)_j - ln(a) N/n
      double falling = a;  // a * prod_{i<j} (N-i)/((n-i) a)
      value = b[0] * a;
      for (int j = 1; j <= t.degree && j <= count; ++j) {
        falling *= static_cast<double>(count - (j - 1)) / ((nn - (j - 1)) * a);
        value += b[static_cast<std::size_t>(j)] * falling;
      }
      value -= std::log(a) * static_cast<double>(count) / nn;
    } else {
      double f = static_cast<double>(count) / nn;
      value = -f * std::log(f) + 0.5 / nn;
    }
    raw[static_cast<std::size_t>(count)] = value;
  }
  for (std::int64_t count = 0; count < n; ++count) {
    t.raw_max_increment = std::max(t.raw_max_increment, std::fabs(raw[static_cast<std::size_t>(count + 1)] -
                                                                  raw[static_cast<std::size_t>(count)]));
  }
  t.max_increment = clamp ? *clamp : t.raw_max_increment;
  t.g.resize(raw.size());
  t.g[0] = raw[0];
  for (std::size_t count = 1; count < raw.size(); ++count) {
    double d = std::clamp(raw[count] - raw[count - 1], -t.max_increment, t.max_increment);
    t.g[count] = t.g[count - 1] + d;
  }
  return t;
}

// Smallest lambda in [0.01, 1] whose clamp n^lambda/(2n) leaves the table
// untouched.  Depends on (n, k) only.
inline double poly_entropy_auto_lambda(std::int64_t n, std::size_t k, double degree_factor = 1.2) {
  if (n <= 1) return 1.0;
  PolyEntropyTable t = poly_entropy_table(n, k, degree_factor);
  const double nn = static_cast<double>(n);
  double lambda = std::log(2.0 * nn * t.raw_max_increment) / std::log(nn);
  return std::clamp(lambda, 0.01, 1.0);
}

inline double entropy_poly_value(const Histogram& hist, std::size_t k, const PolyEntropyTable& t) {
  if (hist.k() > k) throw DimensionMismatch("histogram alphabet exceeds k");
  CompensatedSum sum;
  std::int64_t seen = 0;
  for (auto c : hist.counts) {
    if (c > 0) {
      sum.add(t.g[static_cast<std::size_t>(c)]);
      ++seen;
    }
  }
  sum.add(static_cast<double>(static_cast<std::int64_t>(k) - seen) * t.g[0]);
  return std::clamp(sum.value(), 0.0, std::log(static_cast<double>(k)));
}

// Polynomial-approximation estimator plus Laplace(n^lambda/(n eps)).  When
// lambda is not given, poly_entropy_auto_lambda picks it.
inline PropertyEstimate entropy_private_poly(const SampleSet& samples, std::size_t k, double alpha,
                                             const PrivacyBudget& budget, std::optional<double> lambda,
                                             Rng& rng, double degree_factor = 1.2) {
  (void)alpha;
  if (samples.empty()) throw EmptyHistogram("no samples");
  const auto n = static_cast<std::int64_t>(samples.size());
  const double nn = static_cast<double>(n);
  double lam = lambda ? *lambda : poly_entropy_auto_lambda(n, k, degree_factor);
  if (!(lam >= 0.01 && lam <= 1.0)) throw InvalidParameter("lambda must lie in [0.01, 1]");
  const double sensitivity = std::pow(nn, lam) / nn;
  PolyEntropyTable t = poly_entropy_table(n, k, degree_factor, sensitivity / 2.0);
  Histogram h = Histogram::from_samples(samples, k);
  PropertyEstimate est;
  est.noise_scale = laplace_scale(sensitivity, budget);
  est.value = std::clamp(entropy_poly_value(h, k, t) + rng.laplace(est.noise_scale), 0.0,
                         std::log(static_cast<double>(k)));
  est.regime = EstimateRegime::kPolynomial;
  return est;
}

// ---- Support coverage ----

// ln P(Poisson(r) >= i).
inline double log_poisson_upper_tail(double r, std::int64_t i) {
  if (i <= 0) return 0.0;
  if (r <= 0.0) return -kInf;
  auto log_pmf = [r](std::int64_t j) { return j * std::log(r) - r - std::lgamma(j + 1.0); };
  if (static_cast<double>(i) <= r) {
    double lower = 0.0, term = std::exp(-r);
    for (std::int64_t j = 0; j < i; ++j) {
      lower += term;
      term *= r / static_cast<double>(j + 1);
    }
    return std::log1p(-std::min(lower, 1.0));
  }
  // Terms decrease from j = i on; sum ratios relative to the first term.
  double acc = 1.0, ratio = 1.0;
  for (std::int64_t j = i + 1;; ++j) {
    ratio *= r / static_cast<double>(j);
    acc += ratio;
    if (ratio < 1e-17 * acc) break;
  }
  return log_pmf(i) + std::log(acc);
}

// Coefficient of Phi_i: 1 - (-t)^i P(Poisson(r) >= i).
inline double sgt_coefficient(std::int64_t i, double t, double r) {
  if (i <= 0) return 0.0;
  if (t == 0.0) return 1.0;
  double mag = std::exp(static_cast<double>(i) * std::log(std::fabs(t)) + log_poisson_upper_tail(r, i));
  bool negative_power = t < 0.0 ? false : (i % 2 == 1);
  // (-t)^i is positive for even i or t < 0.
  double power = negative_power ? -mag : mag;
  return 1.0 - power;
}

inline double sgt_theory_r(double alpha) {
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be positive");
  return std::log(3.0 / alpha);
}

// (1/2t) ln(n (t+1)^2 / (t-1)), defined for t > 1.
inline double sgt_experiment_r(std::int64_t n, double t) {
  if (!(t > 1.0)) throw InvalidParameter("experiment r needs t > 1");
  return std::log(static_cast<double>(n) * (t + 1.0) * (t + 1.0) / (t - 1.0)) / (2.0 * t);
}

// Smoothed Good-Toulmin estimate of S_m from the profile of n samples.
inline double coverage_sgt(const Profile& profile, std::int64_t n, std::int64_t m, double r) {
  if (n <= 0) throw InvalidParameter("n must be positive");
  if (m < n) throw InvalidParameter("SGT extrapolates to m >= n; use coverage_batch");
  const double t = static_cast<double>(m - n) / static_cast<double>(n);
  CompensatedSum sum;
  for (std::size_t i = 1; i < profile.phi.size(); ++i) {
    if (profile.phi[i] != 0) sum.add(static_cast<double>(profile.phi[i]) * sgt_coefficient(static_cast<std::int64_t>(i), t, r));
  }
  return sum.value();
}

inline double sgt_coefficient_bound(double t, double r) { return 1.0 + std::exp(r * (t - 1.0)); }

// Exact sensitivity of the SGT estimate: one substitution lowers one count
// and raises another, so it is twice the largest coefficient step.
inline double sgt_sensitivity(std::int64_t n, double t, double r) {
  double step = 0.0;
  for (std::int64_t d = 1; d <= n; ++d) {
    step = std::max(step, std::fabs(sgt_coefficient(d, t, r) - sgt_coefficient(d - 1, t, r)));
  }
  return 2.0 * step;
}

// Closed form S_m(p) = sum_x 1 - (1 - p_x)^m.
inline double support_coverage(const DiscreteDistribution& p, double m) {
  double s = 0.0;
  for (double x : p.probs()) {
    if (x > 0.0) s += -std::expm1(m * std::log1p(-x));
  }
  return s;
}

inline std::int64_t batch_count(std::int64_t n, std::int64_t m) { return m > 0 ? n / m : 0; }

// Mean distinct count over floor(n/m) consecutive batches of size m.  The last
// n mod m samples are dropped.
inline double coverage_batch(const SampleSet& samples, std::size_t k, std::int64_t m) {
  (void)k;
  const auto n = static_cast<std::int64_t>(samples.size());
  if (m <= 0) throw InvalidParameter("m must be positive");
  if (n < m) throw InsufficientSamples("coverage_batch needs n >= m");
  const std::int64_t batches = batch_count(n, m);
  std::int64_t total = 0;
  std::unordered_set<int> seen;
  for (std::int64_t j = 0; j < batches; ++j) {
    seen.clear();
    for (std::int64_t i = 0; i < m; ++i) seen.insert(samples[static_cast<std::size_t>(j * m + i)]);
    total += static_cast<std::int64_t>(seen.size());
  }
  return static_cast<double>(total) / static_cast<double>(batches);
}

// 1/floor(n/m), which is at most 2m/n.
inline double coverage_batch_sensitivity(std::int64_t n, std::int64_t m) {
  const std::int64_t b = batch_count(n, m);
  if (b <= 0) throw InsufficientSamples("coverage_batch needs n >= m");
  return 1.0 / static_cast<double>(b);
}

enum class SgtR { kTheory, kExperiment };

inline bool coverage_uses_batch(std::int64_t m, double alpha, double epsilon) {
  return static_cast<double>(m) <= 1.0 / (alpha * epsilon);
}

inline PropertyEstimate coverage_private(const SampleSet& samples, std::size_t k, std::int64_t m,
                                         double alpha, const PrivacyBudget& budget, Rng& rng,
                                         SgtR r_choice = SgtR::kTheory) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  const auto n = static_cast<std::int64_t>(samples.size());
  if (n == 0) throw InsufficientSamples("no samples");
  PropertyEstimate est;
  if (coverage_uses_batch(m, alpha, budget.epsilon) || m <= n) {
    est.regime = EstimateRegime::kBatch;
    est.noise_scale = laplace_scale(coverage_batch_sensitivity(n, m), budget);
    est.value = coverage_batch(samples, k, m) + rng.laplace(est.noise_scale);
    return est;
  }
  const double t = static_cast<double>(m - n) / static_cast<double>(n);
  double r = sgt_theory_r(alpha);
  if (r_choice == SgtR::kExperiment && t > 1.0) r = sgt_experiment_r(n, t);
  Profile prof = Profile::from_histogram(Histogram::from_samples(samples, std::max(k, alphabet_of(samples))));
  est.regime = EstimateRegime::kSgt;
  est.noise_scale = laplace_scale(sgt_sensitivity(n, t, r), budget);
  est.value = coverage_sgt(prof, n, m, r) + rng.laplace(est.noise_scale);
  return est;
}

// ---- Support size ----

// Sum over observed x of min{1, N_x 3k/n}, with the per-count slope floored
// onto a 2^-32 grid so the bound 3k/n on its sensitivity holds exactly.
inline double support_dense_statistic(const Histogram& hist, std::size_t k) {
  if (hist.n <= 0) throw EmptyHistogram("no samples");
  const auto one = static_cast<__int128>(1) << 32;
  const auto slope = static_cast<__int128>((static_cast<__int128>(3 * static_cast<std::int64_t>(k)) * one) / hist.n);
  __int128 total = 0;
  for (auto c : hist.counts) total += std::min<__int128>(one, slope * c);
  return std::ldexp(static_cast<double>(total), -32);
}

inline bool support_uses_sparse(std::size_t k, double alpha, double epsilon) {
  return static_cast<double>(k) >= 1.0 / (alpha * epsilon);
}

inline std::int64_t support_coverage_target(std::size_t k, double alpha) {
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(k) * std::log(3.0 / alpha)));
}

inline PropertyEstimate support_size_private(const SampleSet& samples, std::size_t k, double alpha,
                                             const PrivacyBudget& budget, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  if (samples.empty()) throw InsufficientSamples("no samples");
  PropertyEstimate est;
  if (support_uses_sparse(k, alpha, budget.epsilon)) {
    est = coverage_private(samples, k, support_coverage_target(k, alpha), alpha, budget, rng);
    est.regime = EstimateRegime::kSparse;
    return est;
  }
  Histogram h = Histogram::from_samples(samples, k);
  const double nn = static_cast<double>(h.n);
  est.regime = EstimateRegime::kDense;
  est.noise_scale = laplace_scale(3.0 * static_cast<double>(k) / nn, budget);
  est.value = support_dense_statistic(h, k) + rng.laplace(est.noise_scale);
  return est;
}

}  // namespace dpdi

#endif  // DPDI_PROPERTIES_HPP_
