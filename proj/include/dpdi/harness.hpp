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

// Config-driven experiment runner, CSV output and file ingestion.
//
// Seeding: trial j of grid point g uses derive_seed(seed, {g, j}).  Grid
// points are enumerated in the order k, n, alpha, epsilon, delta, rho, t
// (last varies fastest).

#ifndef DPDI_HARNESS_HPP_
#define DPDI_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <atomic>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpdi/calibration.hpp"
#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/estimation.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/properties.hpp"
#include "dpdi/rng.hpp"
#include "dpdi/selection.hpp"
#include "dpdi/testing.hpp"

namespace dpdi {

using Json = nlohmann::json;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct ResultRow {
  std::string task;
  std::int64_t k = 0;
  std::int64_t n = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  std::int64_t trial_count = 0;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t seed = 0;
};

inline const char* kCsvHeader = "task,k,n,alpha,epsilon,delta,rho,trial_count,metric,mean,stderr,seed";

inline void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.task << ',' << r.k << ',' << r.n << ',' << format_number(r.alpha) << ',' << format_number(r.epsilon)
       << ',' << format_number(r.delta) << ',' << format_number(r.rho) << ',' << r.trial_count << ',' << r.metric
       << ',' << format_number(r.mean) << ',' << format_number(r.stderr_) << ',' << r.seed << '\n';
  }
}

// ---- files ----

inline SampleSet read_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file " + path);
  SampleSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string tok = line.substr(b, e - b + 1);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v < 1 || v > std::numeric_limits<int>::max()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected a positive integer symbol, got '" + tok + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline Json constants_to_json(const TesterConstants& c, std::optional<double> estimation_c = {},
                              std::optional<std::uint64_t> seed = {}) {
  Json j{{"c", c.c}, {"C1", c.C1}, {"C2", c.C2}, {"multiplier", c.multiplier}};
  if (estimation_c) j["estimation_C"] = *estimation_c;
  if (seed) j["seed"] = *seed;
  return j;
}

inline void apply_constant_overrides(const Json& j, TesterConstants& c, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_number()) throw ConfigError(where + "." + it.key() + ": expected a number");
    const double v = it->get<double>();
    if (it.key() == "c") c.c = v;
    else if (it.key() == "C1") c.C1 = v;
    else if (it.key() == "C2") c.C2 = v;
    else if (it.key() == "multiplier") c.multiplier = v;
    else if (it.key() == "estimation_C" || it.key() == "closeness_expectation_C" || it.key() == "seed") continue;
    else throw ConfigError(where + "." + it.key() + ": unknown constant");
    if (!(v > 0.0)) throw ConfigError(where + "." + it.key() + ": must be positive");
  }
}

inline Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline TesterConstants load_constants(const std::string& path) {
  TesterConstants c;
  apply_constant_overrides(parse_json_file(path), c, path);
  return c;
}

// ---- experiment config ----

struct DistributionSpec {
  std::string family = "uniform";
  double s = 1.0;
  double concentration = 1.0;
  double alpha = 0.0;

  DiscreteDistribution make(std::size_t k, Rng& rng) const {
    if (family == "uniform") return uniform(k);
    if (family == "zipf") return zipf(k, s);
    if (family == "two_step") return two_step(k);
    if (family == "dirichlet") return dirichlet_draw(k, concentration, rng);
    if (family == "paninski") return paninski(k, alpha, rng);
    throw ConfigError("distribution.family: unknown family '" + family + "'");
  }
};

struct ExperimentConfig {
  std::string task;
  std::uint64_t seed = 0;
  std::int64_t trials = 100;
  std::vector<std::int64_t> k, n;
  std::vector<double> alpha{0.1}, epsilon{1.0}, delta{0.0}, rho, t{1.0};
  std::vector<std::string> estimators;
  DistributionSpec distribution;
  TesterConstants constants;
  std::string out;
  unsigned threads = 0;
};

inline const std::vector<std::string>& experiment_tasks() {
  static const std::vector<std::string> tasks{"uniformity", "identity", "closeness", "entropy",
                                              "coverage",   "support",  "estimation", "tournament"};
  return tasks;
}

namespace internal {

template <typename T>
std::vector<T> read_list(const Json& j, const std::string& where, bool positive) {
  std::vector<T> out;
  Json arr = j.is_array() ? j : Json::array({j});
  if (arr.empty()) throw ConfigError(where + ": grid must be non-empty");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const Json& v = arr[i];
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())) {
        throw ConfigError(at + ": expected an integer");
      }
      auto x = static_cast<T>(v.get<double>());
      if (positive && x <= 0) throw ConfigError(at + ": must be positive");
      out.push_back(x);
    } else {
      if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "Infinity")) {
        out.push_back(kInf);
        continue;
      }
      if (!v.is_number()) throw ConfigError(at + ": expected a number");
      auto x = v.get<double>();
      if (positive && !(x > 0.0)) throw ConfigError(at + ": must be positive");
      out.push_back(x);
    }
  }
  return out;
}

}  // namespace internal

inline ExperimentConfig parse_experiment_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  static const std::vector<std::string> known{"task", "seed",  "trials",    "grid",    "distribution",
                                              "estimators", "constants", "out", "threads"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("config." + it.key() + ": unknown field");
    }
  }
  if (!j.contains("task") || !j["task"].is_string()) throw ConfigError("task: required string");
  cfg.task = j["task"].get<std::string>();
  const auto& tasks = experiment_tasks();
  if (std::find(tasks.begin(), tasks.end(), cfg.task) == tasks.end()) {
    throw ConfigError("task: unknown task '" + cfg.task + "'");
  }
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) throw ConfigError("seed: required non-negative integer");
  cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("trials")) {
    if (!j["trials"].is_number_integer() || j["trials"].get<std::int64_t>() < 1) {
      throw ConfigError("trials: expected a positive integer");
    }
    cfg.trials = j["trials"].get<std::int64_t>();
  }
  if (!j.contains("grid") || !j["grid"].is_object()) throw ConfigError("grid: required object");
  const Json& g = j["grid"];
  for (auto it = g.begin(); it != g.end(); ++it) {
    const std::string key = it.key(), where = "grid." + key;
    if (key == "k") cfg.k = internal::read_list<std::int64_t>(*it, where, true);
    else if (key == "n") cfg.n = internal::read_list<std::int64_t>(*it, where, true);
    else if (key == "alpha") cfg.alpha = internal::read_list<double>(*it, where, true);
    else if (key == "epsilon") cfg.epsilon = internal::read_list<double>(*it, where, true);
    else if (key == "delta") cfg.delta = internal::read_list<double>(*it, where, false);
    else if (key == "rho") cfg.rho = internal::read_list<double>(*it, where, true);
    else if (key == "t") cfg.t = internal::read_list<double>(*it, where, true);
    else throw ConfigError(where + ": unknown grid parameter");
  }
  if (cfg.k.empty()) throw ConfigError("grid.k: required");
  for (double a : cfg.alpha) {
    if (!(a < 1.0)) throw ConfigError("grid.alpha: values must lie in (0, 1)");
  }
  for (double d : cfg.delta) {
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("grid.delta: values must lie in [0, 1)");
  }
  const bool needs_n = cfg.task != "uniformity" && cfg.task != "identity" && cfg.task != "closeness" &&
                       cfg.task != "tournament";
  if (needs_n && cfg.n.empty()) throw ConfigError("grid.n: required for task " + cfg.task);
  if (j.contains("distribution")) {
    const Json& d = j["distribution"];
    if (!d.is_object()) throw ConfigError("distribution: expected an object");
    for (auto it = d.begin(); it != d.end(); ++it) {
      const std::string at = "distribution." + it.key();
      if (it.key() == "family") {
        if (!it->is_string()) throw ConfigError(at + ": expected a string");
        cfg.distribution.family = it->get<std::string>();
      } else if (it.key() == "s" || it.key() == "concentration" || it.key() == "alpha") {
        if (!it->is_number()) throw ConfigError(at + ": expected a number");
        double v = it->get<double>();
        if (it.key() == "s") cfg.distribution.s = v;
        else if (it.key() == "concentration") cfg.distribution.concentration = v;
        else cfg.distribution.alpha = v;
      } else {
        throw ConfigError(at + ": unknown field");
      }
    }
    static const std::vector<std::string> families{"uniform", "zipf", "two_step", "dirichlet", "paninski"};
    if (std::find(families.begin(), families.end(), cfg.distribution.family) == families.end()) {
      throw ConfigError("distribution.family: unknown family '" + cfg.distribution.family + "'");
    }
  }
  if (j.contains("estimators")) {
    if (!j["estimators"].is_array()) throw ConfigError("estimators: expected an array of strings");
    for (std::size_t i = 0; i < j["estimators"].size(); ++i) {
      if (!j["estimators"][i].is_string()) throw ConfigError("estimators[" + std::to_string(i) + "]: expected a string");
      cfg.estimators.push_back(j["estimators"][i].get<std::string>());
    }
  }
  if (j.contains("constants")) apply_constant_overrides(j["constants"], cfg.constants, "constants");
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("out: expected a string");
    cfg.out = j["out"].get<std::string>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_unsigned()) throw ConfigError("threads: expected a non-negative integer");
    cfg.threads = j["threads"].get<unsigned>();
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_config_text(const std::string& text) {
  try {
    return parse_experiment_config(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// ---- running ----

struct GridPoint {
  std::int64_t k = 0;
  std::int64_t n = 0;  // 0: derived from the task's sample complexity
  double alpha = 0.0, epsilon = 0.0, delta = 0.0, t = 1.0;
  std::optional<double> rho;

  PrivacyBudget budget() const {
    if (rho) return PrivacyBudget::zcdp(*rho);
    return {epsilon, delta, std::nullopt};
  }
};

inline std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> pts;
  const std::vector<std::int64_t> ns = cfg.n.empty() ? std::vector<std::int64_t>{0} : cfg.n;
  std::vector<std::optional<double>> rhos;
  if (cfg.rho.empty()) rhos.emplace_back();
  for (double r : cfg.rho) rhos.emplace_back(r);
  for (auto k : cfg.k)
    for (auto n : ns)
      for (double a : cfg.alpha)
        for (double e : cfg.epsilon)
          for (double d : cfg.delta)
            for (const auto& r : rhos)
              for (double t : cfg.t) pts.push_back({k, n, a, e, d, t, r});
  return pts;
}

struct MetricAccumulator {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
  double stderr_of_mean() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
};

namespace internal {

// Moves mass between paired symbols so that TV(p, q) = alpha exactly.
inline DiscreteDistribution perturb_pairs(const DiscreteDistribution& q, double alpha, Rng& rng) {
  std::vector<double> w(q.probs());
  double room = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); i += 2) room += std::min(w[i], w[i + 1]);
  if (!(alpha <= room)) throw ConfigError("distribution cannot be perturbed to TV distance alpha");
  const double s = alpha / room;
  for (std::size_t i = 0; i + 1 < w.size(); i += 2) {
    const double d = s * std::min(w[i], w[i + 1]) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    w[i] += d;
    w[i + 1] -= d;
  }
  return normalized(std::move(w));
}

inline bool wants(const ExperimentConfig& cfg, const std::string& name) {
  return cfg.estimators.empty() || std::find(cfg.estimators.begin(), cfg.estimators.end(), name) != cfg.estimators.end();
}

using Metrics = std::map<std::string, MetricAccumulator>;

inline std::int64_t tester_n(const ExperimentConfig& cfg, const GridPoint& g, TestTask task) {
  if (g.n > 0) return g.n;
  if (task == TestTask::IT) return identity_sample_size(static_cast<std::size_t>(g.k), g.alpha, g.budget(), cfg.constants);
  return sample_complexity(task, static_cast<double>(g.k), g.alpha, g.budget(), cfg.constants);
}

inline void add_rmse(Metrics& m, const std::string& name, double estimate, double truth) {
  m[name].add((estimate - truth) * (estimate - truth));
}

inline std::int64_t run_trial(const ExperimentConfig& cfg, const GridPoint& g, Rng& r, Metrics& m) {
  const auto k = static_cast<std::size_t>(g.k);
  const PrivacyBudget budget = g.budget();
  if (cfg.task == "uniformity" || cfg.task == "identity" || cfg.task == "closeness") {
    const TestTask task = cfg.task == "closeness" ? TestTask::CT : cfg.task == "identity" ? TestTask::IT : TestTask::UT;
    const auto n = static_cast<std::size_t>(tester_n(cfg, g, task));
    TesterConfig tc{k, g.alpha, budget, cfg.constants, false};
    const auto base = task == TestTask::UT ? uniform(k) : cfg.distribution.make(k, r);
    const auto far = task == TestTask::UT ? paninski(k, g.alpha, r) : perturb_pairs(base, g.alpha, r);
    if (task == TestTask::CT) {
      m["error_null"].add(closeness_test(sample(base, n, r), sample(base, n, r), tc, r).released_bit);
      m["error_far"].add(1 - closeness_test(sample(base, n, r), sample(far, n, r), tc, r).released_bit);
    } else if (task == TestTask::IT) {
      m["error_null"].add(identity_test(base, sample(base, n, r), tc, r).released_bit);
      m["error_far"].add(1 - identity_test(base, sample(far, n, r), tc, r).released_bit);
    } else {
      m["error_null"].add(uniformity_test(sample(base, n, r), tc, r).released_bit);
      m["error_far"].add(1 - uniformity_test(sample(far, n, r), tc, r).released_bit);
    }
    return static_cast<std::int64_t>(n);
  }
  const auto n = static_cast<std::size_t>(g.n);
  if (cfg.task == "tournament") {
    const int t = static_cast<int>(g.t);
    std::vector<double> values(k);
    for (auto& v : values) v = 4.0 * r.uniform();
    ItemSet items(values);
    AdversarialComparator cmp(items, ComparatorPolicy::kRandomizedAdversary, r());
    RoundOracle oracle(cmp);
    Transcript tr = better_multi_round(items, t, oracle, r);
    m["success_3approx"].add(tr.gap <= 3.0 ? 1.0 : 0.0);
    m["gap"].add(tr.gap);
    m["queries"].add(static_cast<double>(tr.total_queries));
    m["rounds"].add(tr.rounds);
    return 0;
  }
  const auto p = cfg.distribution.make(k, r);
  const SampleSet x = sample(p, n, r);
  if (cfg.task == "entropy") {
    const double h = entropy(p);
    if (wants(cfg, "empirical_laplace")) add_rmse(m, "rmse_empirical_laplace", entropy_private_empirical(x, budget, r).value, h);
    if (wants(cfg, "poly_laplace")) add_rmse(m, "rmse_poly_laplace", entropy_private_poly(x, k, g.alpha, budget, {}, r).value, h);
    if (wants(cfg, "poly")) add_rmse(m, "rmse_poly", entropy_private_poly(x, k, g.alpha, PrivacyBudget::none(), {}, r).value, h);
    if (wants(cfg, "empirical")) add_rmse(m, "rmse_empirical", entropy_empirical(Histogram::from_samples(x, k)), h);
  } else if (cfg.task == "coverage") {
    const auto mm = static_cast<std::int64_t>(std::llround(static_cast<double>(n) * (1.0 + g.t)));
    const double truth = support_coverage(p, static_cast<double>(mm));
    const double norm = static_cast<double>(k);
    if (wants(cfg, "sgt_private")) {
      add_rmse(m, "rmse_sgt_private", coverage_private(x, k, mm, g.alpha, budget, r, SgtR::kExperiment).value / norm,
               truth / norm);
    }
    if (wants(cfg, "sgt")) {
      add_rmse(m, "rmse_sgt", coverage_private(x, k, mm, g.alpha, PrivacyBudget::none(), r, SgtR::kExperiment).value / norm,
               truth / norm);
    }
  } else if (cfg.task == "support") {
    double truth = 0.0;
    for (double q : p.probs()) truth += q > 0.0 ? 1.0 : 0.0;
    add_rmse(m, "rmse_support_private", support_size_private(x, k, g.alpha, budget, r).value / static_cast<double>(k),
             truth / static_cast<double>(k));
  } else if (cfg.task == "estimation") {
    auto est = estimate_kary_private(x, k, budget, r);
    m["tv_error"].add(tv_distance(est, p));
    m["l2_error"].add(divergence(est, p, Divergence::L2));
  }
  return static_cast<std::int64_t>(n);
}

inline std::vector<ResultRow> run_point(const ExperimentConfig& cfg, const GridPoint& g, std::size_t index) {
  Metrics m;
  std::int64_t n_used = g.n;
  for (std::int64_t j = 0; j < cfg.trials; ++j) {
    Rng r(derive_seed(cfg.seed, {index, static_cast<std::uint64_t>(j)}));
    n_used = run_trial(cfg, g, r, m);
  }
  std::vector<ResultRow> rows;
  ResultRow base{cfg.task, g.k, n_used, g.alpha, g.epsilon, g.delta, g.rho.value_or(0.0), cfg.trials, "", 0, 0, cfg.seed};
  if (g.rho) base.epsilon = 0.0;
  if (g.t != 1.0 || cfg.task == "coverage" || cfg.task == "tournament") {
    ResultRow row = base;
    row.metric = "t";
    row.mean = g.t;
    rows.push_back(row);
  }
  for (auto& [name, acc] : m) {
    ResultRow row = base;
    row.metric = name;
    if (name.rfind("rmse_", 0) == 0) {
      // RMSE from the squared errors; stderr by the delta method.
      const double mse = acc.mean();
      row.mean = std::sqrt(mse);
      row.stderr_ = row.mean > 0.0 ? acc.stderr_of_mean() / (2.0 * row.mean) : 0.0;
    } else {
      row.mean = acc.mean();
      row.stderr_ = acc.stderr_of_mean();
    }
    rows.push_back(row);
  }
  if (cfg.task == "uniformity" || cfg.task == "identity" || cfg.task == "closeness") {
    const std::pair<const char*, double> consts[] = {{"constant_c", cfg.constants.c},
                                                     {"constant_C1", cfg.constants.C1},
                                                     {"constant_C2", cfg.constants.C2},
                                                     {"constant_multiplier", cfg.constants.multiplier}};
    for (auto [name, v] : consts) {
      ResultRow row = base;
      row.metric = name;
      row.mean = v;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace internal

// Runs every grid point; points run concurrently and rows come back in grid
// order, so the output does not depend on the thread count.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  const auto pts = expand_grid(cfg);
  std::vector<std::vector<ResultRow>> per_point(pts.size());
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, pts.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < pts.size(); ++i) per_point[i] = internal::run_point(cfg, pts[i], i);
  } else {
    std::vector<std::future<void>> workers;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < pts.size(); i = next++) per_point[i] = internal::run_point(cfg, pts[i], i);
      }));
    }
    for (auto& f : workers) f.get();
  }
  std::vector<ResultRow> rows;
  for (auto& v : per_point) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace dpdi

#endif  // DPDI_HARNESS_HPP_
