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

// Fits the tester constants c, C1, C2 and the sample-complexity multiplier
// on a seeded reference grid.

#ifndef DPDI_CALIBRATION_HPP_
#define DPDI_CALIBRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/estimation.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"
#include "dpdi/testing.hpp"

namespace dpdi {

struct CalibrationPoint {
  TestTask task = TestTask::UT;
  std::size_t k = 100;
  double alpha = 0.25;
  double epsilon = 1.0;
};

struct CalibrationSpec {
  std::vector<CalibrationPoint> points;
  std::int64_t trials = 200;
  std::uint64_t seed = 20260101;
  double target_error = 0.05;
  double c1_quantile = 0.95;
  std::vector<double> n_factors{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> c2_grid{6.0, 8.0, 10.0, 12.0, 16.0, 20.0};
  std::vector<double> multiplier_grid{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 12.0, 16.0};
};

inline CalibrationSpec default_calibration_spec() {
  CalibrationSpec s;
  s.points = {{TestTask::UT, 100, 0.25, 1.0}, {TestTask::UT, 1000, 0.3, 0.5}, {TestTask::UT, 100, 0.3, 0.5},
              {TestTask::UT, 1000, 0.25, 1.0}, {TestTask::CT, 100, 0.3, 1.0}, {TestTask::CT, 200, 0.3, 0.5}};
  return s;
}

struct ErrorRates {
  double null_error = 0.0;
  double far_error = 0.0;
  double null_stderr = 0.0;
  double far_stderr = 0.0;
};

namespace internal {

inline void mean_and_stderr(const std::vector<double>& v, double& mean, double& se) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
}

}  // namespace internal

// Error probabilities of the tester at one point, averaged over instances.
// Uses the exact release probability of each trial, not the sampled bit.
// Null: p = q = U[k].  Far: Paninski perturbations with TV = alpha.
inline ErrorRates tester_error_rates(const CalibrationPoint& pt, std::int64_t n, const TesterConstants& constants,
                                     std::int64_t trials, Rng& rng) {
  TesterConfig cfg;
  cfg.k = pt.k;
  cfg.alpha = pt.alpha;
  cfg.budget = PrivacyBudget::pure(pt.epsilon);
  cfg.constants = constants;
  const auto u = uniform(pt.k);
  std::vector<double> null_err, far_err;
  const auto nn = static_cast<std::size_t>(n);
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng r = rng.split(static_cast<std::uint64_t>(t));
    const auto far = paninski(pt.k, pt.alpha, r);
    if (pt.task == TestTask::CT) {
      TestOutcome o0 = closeness_test(sample(u, nn, r), sample(u, nn, r), cfg, r);
      TestOutcome o1 = closeness_test(sample(u, nn, r), sample(far, nn, r), cfg, r);
      null_err.push_back(sigmoid_release_probability(o0.statistic_value, pt.epsilon));
      far_err.push_back(1.0 - sigmoid_release_probability(o1.statistic_value, pt.epsilon));
    } else {
      double z0 = unif_statistic_Z(sample(u, nn, r), cfg);
      double z1 = unif_statistic_Z(sample(far, nn, r), cfg);
      null_err.push_back(sigmoid_release_probability(z0, pt.epsilon));
      far_err.push_back(1.0 - sigmoid_release_probability(z1, pt.epsilon));
    }
  }
  ErrorRates e;
  internal::mean_and_stderr(null_err, e.null_error, e.null_stderr);
  internal::mean_and_stderr(far_err, e.far_error, e.far_stderr);
  return e;
}

// Largest c with E_far[S] - mu(U) >= c alpha^2 shape at every UT point and
// every n on the factor grid.  All expectations are exact.
inline double calibrate_c(const CalibrationSpec& spec) {
  double c = kInf;
  for (const auto& pt : spec.points) {
    if (pt.task != TestTask::UT) continue;
    const double base = sample_complexity_formula(TestTask::UT, static_cast<double>(pt.k), pt.alpha,
                                                  PrivacyBudget::pure(pt.epsilon));
    // Every sign pattern gives the same multiset of masses.
    const auto far = paninski(pt.k, pt.alpha, std::vector<int>(pt.k / 2, 1));
    for (double f : spec.n_factors) {
      const auto n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(f * base)));
      const double gap = expected_unif_statistic(far, n) - uniform_mean_S(pt.k, n);
      c = std::min(c, gap / (pt.alpha * pt.alpha * unif_separation_shape(pt.k, n, pt.alpha)));
    }
  }
  if (!(c > 0.0) || std::isinf(c)) throw CalibrationFailed("no positive separation constant c");
  return c;
}

// Quantile of |Z - E Z| / sqrt(n) for the closeness statistic under nulls.
// E Z = 0 exactly because the four sample sets are exchangeable.
inline double calibrate_C1(const CalibrationSpec& spec, Rng& rng) {
  double c1 = 0.0;
  bool any = false;
  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const auto& pt = spec.points[pi];
    if (pt.task != TestTask::CT) continue;
    any = true;
    const double base = sample_complexity_formula(TestTask::CT, static_cast<double>(pt.k), pt.alpha,
                                                  PrivacyBudget::pure(pt.epsilon));
    const DiscreteDistribution nulls[] = {uniform(pt.k), two_step(pt.k)};
    for (std::size_t fi = 0; fi < spec.n_factors.size(); ++fi) {
      const auto n = static_cast<std::size_t>(std::ceil(spec.n_factors[fi] * base));
      for (std::size_t d = 0; d < 2; ++d) {
        std::vector<double> dev;
        for (std::int64_t t = 0; t < spec.trials; ++t) {
          Rng r = rng.split(pi).split(fi).split(d).split(static_cast<std::uint64_t>(t));
          auto s = closeness_split(sample(nulls[d], n, r), sample(nulls[d], n, r), pt.k, false, r);
          dev.push_back(std::fabs(closeness_statistic_Z(s.x, s.x2, s.y, s.y2)) / std::sqrt(s.n));
        }
        std::sort(dev.begin(), dev.end());
        auto idx = static_cast<std::size_t>(std::ceil(spec.c1_quantile * static_cast<double>(dev.size()))) - 1;
        c1 = std::max(c1, dev[std::min(idx, dev.size() - 1)]);
      }
    }
  }
  if (!any) throw CalibrationFailed("no closeness points to fit C1");
  if (!(c1 > 0.0)) throw CalibrationFailed("degenerate C1");
  return c1;
}

struct EstimationCalibrationPoint {
  std::size_t k = 50;
  std::int64_t n = 1000;
  double epsilon = 1.0;
};

inline std::vector<EstimationCalibrationPoint> default_estimation_grid() {
  std::vector<EstimationCalibrationPoint> g;
  for (std::size_t k : {20, 50, 200}) {
    for (std::int64_t n : {1000, 10000}) {
      for (double e : {0.5, 1.0, 2.0}) g.push_back({k, n, e});
    }
  }
  return g;
}

// Largest ratio E[TV error] / (sqrt(k/n) + k/(n eps)) over the grid, on
// uniform and Zipf(1) truths, times `margin`.
inline double calibrate_estimation_constant(const std::vector<EstimationCalibrationPoint>& grid, std::int64_t trials,
                                            std::uint64_t seed, double margin = 1.25) {
  if (grid.empty()) throw CalibrationFailed("empty estimation grid");
  Rng root(seed);
  double worst = 0.0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto& g = grid[gi];
    const DiscreteDistribution truths[] = {uniform(g.k), zipf(g.k, 1.0)};
    for (std::size_t d = 0; d < 2; ++d) {
      Rng r = root.split(gi).split(d);
      double sum = 0.0;
      for (std::int64_t t = 0; t < trials; ++t) {
        auto x = sample(truths[d], static_cast<std::size_t>(g.n), r);
        sum += tv_distance(estimate_kary_private(x, g.k, PrivacyBudget::pure(g.epsilon), r), truths[d]);
      }
      worst = std::max(worst, sum / static_cast<double>(trials) / estimation_error_shape(g.k, g.n, g.epsilon));
    }
  }
  return margin * worst;
}

// Smallest ratio E_far[Z] / closeness_expectation_shape over the closeness
// points and n factors, times `margin`.  Far pairs are U[k] against Paninski
// perturbations.
inline double calibrate_closeness_expectation(const CalibrationSpec& spec, Rng& rng, double margin = 0.75) {
  double worst = kInf;
  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const auto& pt = spec.points[pi];
    if (pt.task != TestTask::CT) continue;
    const double base = sample_complexity_formula(TestTask::CT, static_cast<double>(pt.k), pt.alpha,
                                                  PrivacyBudget::pure(pt.epsilon));
    const auto u = uniform(pt.k);
    for (std::size_t fi = 0; fi < spec.n_factors.size(); ++fi) {
      const auto n = static_cast<std::size_t>(std::ceil(spec.n_factors[fi] * base));
      double sum = 0.0, per_set = 0.0;
      for (std::int64_t t = 0; t < spec.trials; ++t) {
        Rng r = rng.split(pi).split(fi).split(static_cast<std::uint64_t>(t));
        const auto far = paninski(pt.k, pt.alpha, r);
        auto s = closeness_split(sample(u, n, r), sample(far, n, r), pt.k, false, r);
        sum += closeness_statistic_Z(s.x, s.x2, s.y, s.y2);
        per_set = s.n;
      }
      worst = std::min(worst, sum / static_cast<double>(spec.trials) /
                                  closeness_expectation_shape(per_set, pt.k, pt.alpha));
    }
  }
  if (!(worst > 0.0) || std::isinf(worst)) throw CalibrationFailed("no positive closeness expectation constant");
  return margin * worst;
}

struct CalibrationResult {
  TesterConstants constants;
  double estimation_C = kEstimationErrorConstant;
  double closeness_expectation_C = kClosenessExpectationConstant;
  std::uint64_t seed = 0;
  std::vector<ErrorRates> rates;  // per point at the chosen multiplier
};

// c and C1 first, then the smallest C2 and multiplier that keep both error
// rates at or below the target on every point.
inline CalibrationResult calibrate_constants(const CalibrationSpec& spec) {
  if (spec.points.empty()) throw CalibrationFailed("empty reference grid");
  Rng root(spec.seed);
  CalibrationResult out;
  out.seed = spec.seed;
  out.constants.c = calibrate_c(spec);
  out.estimation_C = calibrate_estimation_constant(default_estimation_grid(), 100, spec.seed);
  Rng c1_rng = root.split(1);
  out.constants.C1 = calibrate_C1(spec, c1_rng);
  Rng ez_rng = root.split(3);
  out.closeness_expectation_C = calibrate_closeness_expectation(spec, ez_rng);
  auto point_ok = [&](const TesterConstants& k, std::size_t pi, ErrorRates* rates) {
    const auto& pt = spec.points[pi];
    const auto n = sample_complexity(pt.task, static_cast<double>(pt.k), pt.alpha, PrivacyBudget::pure(pt.epsilon), k);
    Rng r = root.split(2).split(pi);
    ErrorRates e = tester_error_rates(pt, n, k, spec.trials, r);
    if (rates) *rates = e;
    return e.null_error <= spec.target_error && e.far_error <= spec.target_error;
  };
  // C2 only moves the closeness threshold; pick it with the null error alone
  // at the largest multiplier, where the C1 sqrt(n) term dominates the least.
  bool c2_found = false;
  for (double c2 : spec.c2_grid) {
    TesterConstants k = out.constants;
    k.C2 = c2;
    k.multiplier = spec.multiplier_grid.back();
    bool ok = true;
    for (std::size_t pi = 0; pi < spec.points.size() && ok; ++pi) {
      if (spec.points[pi].task != TestTask::CT) continue;
      ErrorRates e;
      point_ok(k, pi, &e);
      ok = e.null_error <= spec.target_error;
    }
    if (ok) {
      out.constants.C2 = c2;
      c2_found = true;
      break;
    }
  }
  if (!c2_found) throw CalibrationFailed("no C2 on the grid keeps the closeness null error at target");
  for (double m : spec.multiplier_grid) {
    TesterConstants k = out.constants;
    k.multiplier = m;
    std::vector<ErrorRates> rates(spec.points.size());
    bool ok = true;
    for (std::size_t pi = 0; pi < spec.points.size() && ok; ++pi) ok = point_ok(k, pi, &rates[pi]);
    if (ok) {
      out.constants.multiplier = m;
      out.rates = std::move(rates);
      return out;
    }
  }
  throw CalibrationFailed("no multiplier on the grid reaches the target error");
}

}  // namespace dpdi

#endif  // DPDI_CALIBRATION_HPP_
