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

// Private k-ary distribution estimation.

#ifndef DPDI_ESTIMATION_HPP_
#define DPDI_ESTIMATION_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

struct EstimationReport {
  DiscreteDistribution estimate;
  double tv_error = 0.0;
  double l2_error = 0.0;
  std::int64_t n = 0;
  PrivacyBudget budget;
};

inline DiscreteDistribution empirical_distribution(const Histogram& h) {
  if (h.n <= 0) throw InsufficientSamples("empirical distribution of zero samples");
  std::vector<double> p(h.k());
  for (std::size_t i = 0; i < h.k(); ++i) p[i] = static_cast<double>(h.counts[i]) / static_cast<double>(h.n);
  return DiscreteDistribution(std::move(p));
}

// Empirical frequencies plus independent Laplace(2/(n eps)) per coordinate,
// projected back onto the simplex.
inline DiscreteDistribution estimate_kary_private(const SampleSet& samples, std::size_t k,
                                                  const PrivacyBudget& budget, Rng& rng) {
  if (samples.empty()) throw InsufficientSamples("estimation needs n >= 1");
  Histogram h = Histogram::from_samples(samples, k);
  const double n = static_cast<double>(h.n);
  const double scale = laplace_scale(2.0 / n, budget);
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<double>(h.counts[i]) / n + rng.laplace(scale);
  return project_to_simplex(v);
}

inline EstimationReport evaluate_estimate(const DiscreteDistribution& estimate, const DiscreteDistribution& truth,
                                          std::int64_t n, const PrivacyBudget& budget) {
  return {estimate, divergence(estimate, truth, Divergence::TV), divergence(estimate, truth, Divergence::L2), n,
          budget};
}

// sqrt(k/n) + k/(n eps), the expected TV error rate.
inline double estimation_error_shape(std::size_t k, std::int64_t n, double epsilon) {
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  return std::sqrt(kk / nn) + (std::isinf(epsilon) ? 0.0 : kk / (nn * epsilon));
}

// Output of calibrate_estimation_constant with seed 20260101.
inline constexpr double kEstimationErrorConstant = 0.551974815555;

enum class EstimationMetric { TV, L2 };

struct EstimationComplexity {
  std::int64_t count = 0;
  bool upper_bound_only = false;
};

inline EstimationComplexity estimation_sample_complexity(std::size_t k, double alpha, const PrivacyBudget& budget,
                                                         EstimationMetric metric, double multiplier = 1.0) {
  if (k == 0) throw InvalidParameter("k must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  const double eps = budget.effective_epsilon();
  if (!(eps > 0.0)) throw InvalidParameter("epsilon must be positive");
  const double kk = static_cast<double>(k);
  const double inv_eps = std::isinf(eps) ? 0.0 : 1.0 / eps;
  double value = 0.0;
  bool upper = false;
  if (metric == EstimationMetric::TV) {
    value = kk / (alpha * alpha) + kk * inv_eps / alpha;
  } else if (alpha < 1.0 / std::sqrt(kk)) {
    value = 1.0 / (alpha * alpha) + std::sqrt(kk) * inv_eps / alpha;
  } else {
    value = 1.0 / (alpha * alpha) + std::log(kk) * inv_eps / (alpha * alpha);
    upper = true;
  }
  return {static_cast<std::int64_t>(std::ceil(multiplier * value)), upper};
}

}  // namespace dpdi

#endif  // DPDI_ESTIMATION_HPP_
