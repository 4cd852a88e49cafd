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

// Privacy primitives: budgets, Laplace noise, randomized response, sigmoid
// release, an exhaustive sensitivity oracle and a statistical ratio audit.

#ifndef DPDI_MECHANISMS_HPP_
#define DPDI_MECHANISMS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Either an (epsilon, delta) budget or a rho-zCDP budget.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  std::optional<double> rho;

  static PrivacyBudget pure(double eps) { return {eps, 0.0, std::nullopt}; }
  static PrivacyBudget approx(double eps, double delta) { return {eps, delta, std::nullopt}; }
  static PrivacyBudget zcdp(double rho) { return {0.0, 0.0, rho}; }
  static PrivacyBudget none() { return {kInf, 0.0, std::nullopt}; }

  bool is_zcdp() const { return rho.has_value(); }

  // epsilon + delta, the substitution used to run pure-DP testers under
  // approximate DP.
  double effective_epsilon() const { return epsilon + delta; }

  void validate() const {
    if (rho) {
      if (!(*rho > 0.0)) throw InvalidBudget("rho must be positive");
      return;
    }
    if (!(epsilon > 0.0)) throw InvalidBudget("epsilon must be positive");
    if (!(delta >= 0.0 && delta < 1.0)) throw InvalidBudget("delta must lie in [0, 1)");
  }
};

struct SensitivityBound {
  double delta_f = 0.0;
  std::int64_t n = 0;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Scale of the Laplace noise released for sensitivity delta_f at the given
// pure budget.  Infinite epsilon means no noise.
inline double laplace_scale(double delta_f, const PrivacyBudget& budget) {
  if (budget.is_zcdp()) throw InvalidBudget("Laplace mechanism needs an epsilon budget");
  if (!(budget.epsilon > 0.0)) throw InvalidBudget("epsilon must be positive");
  if (budget.delta != 0.0) throw InvalidBudget("Laplace mechanism is pure; delta must be 0");
  if (std::isinf(budget.epsilon)) return 0.0;
  return delta_f / budget.epsilon;
}

inline double laplace_mechanism(double value, const SensitivityBound& sens,
                                const PrivacyBudget& budget, Rng& rng) {
  return value + rng.laplace(laplace_scale(sens.delta_f, budget));
}

inline double laplace_density(double x, double location, double scale) {
  return std::exp(-std::fabs(x - location) / scale) / (2.0 * scale);
}

// Probability that randomized response keeps its input bit.
inline double rr_keep_probability(double epsilon) { return sigmoid(epsilon); }

inline double rr_output_probability(int bit_in, int bit_out, double epsilon) {
  double keep = rr_keep_probability(epsilon);
  return bit_in == bit_out ? keep : 1.0 - keep;
}

inline int randomized_response(int bit, double epsilon, Rng& rng) {
  if (bit != 0 && bit != 1) throw InvalidParameter("randomized_response takes a bit");
  return rng.bernoulli(rr_keep_probability(epsilon)) ? bit : 1 - bit;
}

// Unbiased estimate of the input bit-mean from the mean of RR outputs.
inline double rr_debias(double mean_of_outputs, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidBudget("rr_debias needs epsilon > 0");
  if (std::isinf(epsilon)) return mean_of_outputs;
  double e = std::exp(epsilon);
  return (e + 1.0) / (e - 1.0) * (mean_of_outputs - 1.0 / (e + 1.0));
}

// P(release = 1) = sigma(epsilon z).
inline double sigmoid_release_probability(double z, double epsilon) {
  if (z == 0.0) return 0.5;
  if (std::isinf(epsilon)) return z > 0.0 ? 1.0 : 0.0;
  return sigmoid(epsilon * z);
}

inline int sigmoid_release(double z, double epsilon, Rng& rng) {
  return rng.bernoulli(sigmoid_release_probability(z, epsilon)) ? 1 : 0;
}

using Statistic = std::function<double(const SampleSet&)>;

// Exact max |f(x) - f(y)| over all x in [k]^n and all single-coordinate
// substitutions y.  Every dataset is evaluated once; neighbours are looked up
// by their base-k index.
inline SensitivityBound sensitivity_exhaustive(const Statistic& f, std::size_t k, std::size_t n,
                                               double limit = 1e6) {
  if (k == 0) throw InvalidParameter("k must be positive");
  if (std::pow(static_cast<double>(k), static_cast<double>(n)) > limit) {
    throw TooLarge("k^n = " + std::to_string(k) + "^" + std::to_string(n) + " exceeds " +
                   std::to_string(limit));
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  std::vector<double> values(total);
  SampleSet x(n, 1);
  for (std::size_t idx = 0; idx < total; ++idx) {
    values[idx] = f(x);
    for (std::size_t j = 0; j < n; ++j) {  // increment base-k odometer
      if (static_cast<std::size_t>(x[j]) < k) {
        ++x[j];
        break;
      }
      x[j] = 1;
    }
  }
  double worst = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx, place = 1;
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t digit = rest % k;
      rest /= k;
      for (std::size_t d = digit + 1; d < k; ++d) {
        std::size_t other = idx + (d - digit) * place;
        worst = std::max(worst, std::fabs(values[idx] - values[other]));
      }
      place *= k;
    }
  }
  return {worst, static_cast<std::int64_t>(n)};
}

enum class AuditVerdict { kPass, kFail, kInconclusive };

inline const char* to_string(AuditVerdict v) {
  switch (v) {
    case AuditVerdict::kPass: return "pass";
    case AuditVerdict::kFail: return "fail";
    default: return "inconclusive";
  }
}

using Mechanism = std::function<std::int64_t(const SampleSet&, Rng&)>;

struct AuditReport {
  AuditVerdict verdict = AuditVerdict::kPass;
  double worst_z = 0.0;  // largest standardized violation observed
  std::map<std::int64_t, std::pair<double, double>> frequencies;
};

// Monte-Carlo check of P[M(x) = o] <= e^{t eps} P[M(y) = o] + delta t e^{eps (t-1)}
// in both directions, t = hamming(x, y).  Fails only on a violation beyond
// 5 standard errors; a violation between 3 and 5 standard errors is
// inconclusive.
inline AuditReport dp_ratio_audit(const Mechanism& mech, const SampleSet& x, const SampleSet& y,
                                  const PrivacyBudget& budget, std::int64_t trials, Rng& rng) {
  const auto t = static_cast<double>(hamming(x, y));
  if (trials <= 0) throw InvalidParameter("trials must be positive");
  std::map<std::int64_t, std::pair<double, double>> freq;
  for (std::int64_t i = 0; i < trials; ++i) freq[mech(x, rng)].first += 1.0;
  for (std::int64_t i = 0; i < trials; ++i) freq[mech(y, rng)].second += 1.0;
  const double m = static_cast<double>(trials);
  const double factor = std::exp(t * budget.epsilon);
  const double additive = budget.delta * t * std::exp(budget.epsilon * (t - 1.0));
  AuditReport report;
  for (auto& [outcome, f] : freq) {
    f.first /= m;
    f.second /= m;
    for (int dir = 0; dir < 2; ++dir) {
      double a = dir == 0 ? f.first : f.second;
      double b = dir == 0 ? f.second : f.first;
      double violation = a - (factor * b + additive);
      if (violation <= 0.0) continue;
      double se = std::sqrt(a * (1 - a) / m + factor * factor * b * (1 - b) / m);
      double z = se > 0.0 ? violation / se : kInf;
      report.worst_z = std::max(report.worst_z, z);
    }
  }
  report.frequencies = std::move(freq);
  if (report.worst_z > 5.0) {
    report.verdict = AuditVerdict::kFail;
  } else if (report.worst_z > 3.0) {
    report.verdict = AuditVerdict::kInconclusive;
  }
  return report;
}

}  // namespace dpdi

#endif  // DPDI_MECHANISMS_HPP_
