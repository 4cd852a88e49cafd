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

// Command-line front end: one subcommand per module entry point.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpdi/dpdi.hpp"
#include "dpdi/harness.hpp"

namespace {

using namespace dpdi;

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
  std::int64_t trials = 1;
  std::string constants_file;
};

// Key/value lines, numbers with 12 significant digits.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }
  void kv(const std::string& key, double v) { os() << key << ' ' << format_number(v) << '\n'; }
  void kv(const std::string& key, const std::string& v) { os() << key << ' ' << v << '\n'; }
  void vec(const std::string& key, const std::vector<double>& v) {
    os() << key;
    for (double x : v) os() << ' ' << format_number(x);
    os() << '\n';
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

PrivacyBudget make_budget(double eps, double delta, double rho) {
  PrivacyBudget b = rho > 0.0 ? PrivacyBudget::zcdp(rho) : PrivacyBudget{eps, delta, std::nullopt};
  b.validate();
  return b;
}

TesterConstants constants_for(const Globals& g) {
  return g.constants_file.empty() ? TesterConstants{} : load_constants(g.constants_file);
}

std::vector<double> read_probability_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<double> w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double v = 0.0;
    if (!(ss >> v)) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected a number");
    w.push_back(v);
  }
  return w;
}

struct SampleSource {
  std::string file;
  std::string family = "uniform";
  double s = 1.0;
  std::int64_t n = 0;

  SampleSet get(std::size_t k, Rng& rng) const {
    if (!file.empty()) return read_sample_file(file);
    if (n <= 0) throw InvalidParameter("give --samples or --n");
    DistributionSpec spec;
    spec.family = family;
    spec.s = s;
    return sample(spec.make(k, rng), static_cast<std::size_t>(n), rng);
  }
};

void add_source(CLI::App* app, SampleSource& src, const std::string& suffix = "") {
  app->add_option("--samples" + suffix, src.file, "newline-delimited integer symbols");
  app->add_option("--n" + suffix, src.n, "synthetic sample size");
  app->add_option("--dist" + suffix, src.family, "synthetic family: uniform, zipf, two_step, dirichlet");
  app->add_option("--zipf-s" + suffix, src.s, "zipf exponent");
}

void print_outcome(Output& o, const TestOutcome& t, std::size_t n) {
  o.kv("n", static_cast<double>(n));
  o.kv("statistic", t.statistic_value);
  o.kv("released_bit", t.released_bit);
  o.kv("decision", t.decision == Decision::kAlternative ? "reject" : "accept");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpdi: private discrete inference toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "base seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--trials", g.trials, "Monte Carlo trials")->capture_default_str();
  app.add_option("--constants-file", g.constants_file, "tester constants JSON");
  app.fallthrough();

  std::size_t k = 0;
  double alpha = 0.1, eps = 1.0, delta = 0.0, rho = 0.0;
  auto add_budget = [&](CLI::App* s) {
    s->add_option("--epsilon", eps, "privacy epsilon (inf for none)")->capture_default_str();
    s->add_option("--delta", delta, "privacy delta")->capture_default_str();
    s->add_option("--rho", rho, "zCDP rho (overrides epsilon)");
  };

  // ---- testing ----
  SampleSource src, src2;
  std::string q_file, q_family = "uniform";
  auto* tu = app.add_subcommand("test-uniformity", "private uniformity test");
  auto* ti = app.add_subcommand("test-identity", "private identity test against a reference q");
  auto* tc = app.add_subcommand("test-closeness", "private two-sample closeness test");
  for (auto* s : {tu, ti, tc}) {
    s->add_option("--k", k, "alphabet size")->required();
    s->add_option("--alpha", alpha, "TV distance")->capture_default_str();
    add_budget(s);
    add_source(s, src);
  }
  ti->add_option("--q", q_file, "reference probabilities, one per line");
  ti->add_option("--q-dist", q_family, "reference family when --q is absent");
  add_source(tc, src2, "2");

  // ---- estimation ----
  std::string method = "poly", r_choice = "experiment";
  std::int64_t m = 0;
  double t_extrap = 0.0;
  auto* ee = app.add_subcommand("estimate-entropy", "private entropy estimate");
  auto* ec = app.add_subcommand("estimate-coverage", "private support coverage estimate");
  auto* es = app.add_subcommand("estimate-support", "private support size estimate");
  auto* ed = app.add_subcommand("estimate-distribution", "private k-ary distribution estimate");
  for (auto* s : {ee, ec, es, ed}) {
    s->add_option("--k", k, "alphabet size")->required();
    s->add_option("--alpha", alpha, "target accuracy")->capture_default_str();
    add_budget(s);
    add_source(s, src);
  }
  ee->add_option("--method", method, "empirical, poly")->capture_default_str();
  ec->add_option("--m", m, "coverage horizon");
  ec->add_option("--t", t_extrap, "extrapolation ratio, m = n (1 + t)");
  ec->add_option("--r", r_choice, "SGT r: theory, experiment")->capture_default_str();

  // ---- couplings and codes ----
  std::string coupling = "coin";
  double b1 = 0.3, b2 = 0.5;
  std::size_t cn = 10, weight = 4, dist = 4;
  auto* cv = app.add_subcommand("coupling-verify", "Monte Carlo check of a coupling's Hamming bound");
  cv->add_option("--type", coupling, "coin, maximal, paninski")->capture_default_str();
  cv->add_option("--n", cn, "dataset size")->capture_default_str();
  cv->add_option("--b1", b1, "coin bias of X")->capture_default_str();
  cv->add_option("--b2", b2, "coin bias of Y")->capture_default_str();
  cv->add_option("--k", k, "alphabet size (paninski, maximal)");
  cv->add_option("--alpha", alpha, "perturbation")->capture_default_str();
  auto* gv = app.add_subcommand("codes-gv", "greedy constant-weight code");
  gv->add_option("--k", k, "length (<= 64)")->required();
  gv->add_option("--weight", weight, "codeword weight")->capture_default_str();
  gv->add_option("--distance", dist, "minimum distance")->capture_default_str();
  bool list_words = false;
  gv->add_flag("--list", list_words, "print the codewords");

  // ---- selection ----
  int rounds = 2;
  std::string policy = "random";
  auto* st = app.add_subcommand("select-tournament", "approximate maximum with an adversarial comparator");
  st->add_option("--k", k, "number of items")->required();
  st->add_option("--t", rounds, "rounds")->capture_default_str();
  st->add_option("--policy", policy, "honest, random, greedy")->capture_default_str();
  std::string ldp_method = "loglik";
  std::int64_t users = 0;
  double sep = 0.3;
  auto* sl = app.add_subcommand("select-ldp", "locally private hypothesis selection on a random instance");
  sl->add_option("--k", k, "number of hypotheses")->required();
  sl->add_option("--domain", cn, "domain size of each hypothesis")->capture_default_str();
  sl->add_option("--users", users, "number of users")->required();
  sl->add_option("--method", ldp_method, "loglik, tournament")->capture_default_str();
  sl->add_option("--t", rounds, "tournament rounds")->capture_default_str();
  sl->add_option("--separation", sep, "minimum pairwise TV")->capture_default_str();
  add_budget(sl);

  // ---- optimization ----
  std::size_t p = 4;
  double eta = 0.4, lambda = 1.0;
  std::int64_t iters = 0;
  std::string model_file, spins_file;
  bool symmetrize = false;
  std::int64_t count = 1000;
  auto* is = app.add_subcommand("ising-sample", "Gibbs samples from an Ising model");
  is->add_option("--p", p, "number of spins")->capture_default_str();
  is->add_option("--eta", eta, "matched-pair coupling strength")->capture_default_str();
  is->add_option("--model", model_file, "JSON with A and theta");
  is->add_option("--n", count, "samples")->capture_default_str();
  auto* il = app.add_subcommand("ising-learn", "private per-node Ising parameter learning");
  il->add_option("--spins", spins_file, "samples, one line of +-1 values each")->required();
  il->add_option("--lambda", lambda, "width bound")->capture_default_str();
  il->add_option("--T", iters, "Frank-Wolfe iterations (default from budget)");
  il->add_flag("--symmetrize", symmetrize, "average A with its transpose");
  add_budget(il);
  auto* fw = app.add_subcommand("fw-run", "private Frank-Wolfe on synthetic sparse logistic data");
  fw->add_option("--n", count, "rows")->capture_default_str();
  fw->add_option("--p", p, "dimension")->capture_default_str();
  fw->add_option("--lambda", lambda, "l1 radius")->capture_default_str();
  fw->add_option("--T", iters, "iterations (default from budget)");
  add_budget(fw);

  // ---- harness ----
  auto* cal = app.add_subcommand("calibrate", "fit tester constants on the reference grid");
  auto* ex = app.add_subcommand("experiment", "run a JSON experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Rng rng(g.seed);
    Output out(g.out);
    if (tu->parsed() || ti->parsed() || tc->parsed()) {
      TesterConfig cfg{k, alpha, PrivacyBudget{eps, delta, std::nullopt}, constants_for(g), false};
      cfg.budget.validate();
      const TestTask task = tc->parsed() ? TestTask::CT : ti->parsed() ? TestTask::IT : TestTask::UT;
      SampleSource s1 = src, s2 = src2;
      const bool draw_from_q = ti->parsed() && s1.file.empty() && ti->get_option("--dist")->count() == 0;
      if (s1.file.empty() && s1.n == 0) {
        s1.n = task == TestTask::IT ? identity_sample_size(k, alpha, cfg.budget, cfg.constants)
                                    : sample_complexity(task, static_cast<double>(k), alpha, cfg.budget, cfg.constants);
      }
      if (s2.file.empty() && s2.n == 0) s2.n = s1.n;
      std::optional<DiscreteDistribution> q;
      if (ti->parsed()) {
        DistributionSpec spec;
        spec.family = q_family;
        q = q_file.empty() ? spec.make(k, rng) : normalized(read_probability_file(q_file));
        if (q->k() != k) throw DimensionMismatch("q has " + std::to_string(q->k()) + " entries, k is " + std::to_string(k));
      }
      const bool single = !s1.file.empty() || g.trials <= 1;
      MetricAccumulator rejects;
      TestOutcome last;
      std::size_t n_used = 0;
      for (std::int64_t j = 0; j < (single ? 1 : g.trials); ++j) {
        Rng r = rng.split(static_cast<std::uint64_t>(j));
        SampleSet x = draw_from_q ? sample(*q, static_cast<std::size_t>(s1.n), r) : s1.get(k, r);
        n_used = x.size();
        if (tc->parsed()) last = closeness_test(x, s2.get(k, r), cfg, r);
        else if (ti->parsed()) last = identity_test(*q, x, cfg, r);
        else last = uniformity_test(x, cfg, r);
        rejects.add(last.released_bit);
      }
      if (single) {
        print_outcome(out, last, n_used);
      } else {
        out.kv("n", static_cast<double>(n_used));
        out.kv("trials", static_cast<double>(g.trials));
        out.kv("reject_rate", rejects.mean());
        out.kv("stderr", rejects.stderr_of_mean());
      }
    } else if (ee->parsed() || ec->parsed() || es->parsed() || ed->parsed()) {
      const PrivacyBudget budget = make_budget(eps, delta, 0.0);
      SampleSet x = src.get(k, rng);
      PropertyEstimate est;
      if (ee->parsed()) {
        if (method == "empirical") est = entropy_private_empirical(x, budget, rng);
        else if (method == "poly") est = entropy_private_poly(x, k, alpha, budget, {}, rng);
        else throw InvalidParameter("unknown entropy method " + method);
      } else if (ec->parsed()) {
        const auto n = static_cast<std::int64_t>(x.size());
        const std::int64_t horizon = m > 0 ? m : static_cast<std::int64_t>(std::llround(n * (1.0 + t_extrap)));
        SgtR rc = r_choice == "theory" ? SgtR::kTheory : SgtR::kExperiment;
        if (r_choice != "theory" && r_choice != "experiment") throw InvalidParameter("unknown r choice " + r_choice);
        est = coverage_private(x, k, horizon, alpha, budget, rng, rc);
        out.kv("m", static_cast<double>(horizon));
      } else if (es->parsed()) {
        est = support_size_private(x, k, alpha, budget, rng);
      } else {
        auto d = estimate_kary_private(x, k, budget, rng);
        out.kv("n", static_cast<double>(x.size()));
        out.vec("p", d.probs());
        return 0;
      }
      out.kv("n", static_cast<double>(x.size()));
      out.kv("estimate", est.value);
      out.kv("noise_scale", est.noise_scale);
      out.kv("regime", to_string(est.regime));
    } else if (cv->parsed()) {
      std::optional<Coupling> c;
      if (coupling == "coin") {
        c = coin_coupling(b1, b2, cn);
      } else if (coupling == "maximal") {
        if (k < 2 || k % 2 != 0) throw InvalidParameter("maximal coupling needs an even --k");
        Rng inst = rng.split(1);
        c = maximal_coupling(uniform(k), paninski(k, alpha, inst), cn);
      } else if (coupling == "paninski") {
        c = paninski_coupling(k, alpha, cn);
      } else {
        throw InvalidParameter("unknown coupling " + coupling);
      }
      Rng r = rng.split(2);
      HammingEstimate h = expected_hamming_mc(*c, std::max<std::int64_t>(g.trials, 1), r);
      out.kv("law_x", c->law_x());
      out.kv("law_y", c->law_y());
      out.kv("mean_hamming", h.mean);
      out.kv("stderr", h.std_error);
      out.kv("bound", c->d_bound());
      out.kv("violation", h.violation ? "yes" : "no");
      if (h.violation) return 3;
    } else if (gv->parsed()) {
      Codebook cb = gv_constant_weight_code(k, weight, dist);
      out.kv("size", static_cast<double>(cb.size()));
      out.kv("valid", codebook_valid(cb) ? "yes" : "no");
      out.kv("volume_floor", gv_volume_floor(k, weight, dist));
      if (list_words) {
        for (auto w : cb.codewords) {
          std::string bits;
          for (std::size_t i = 0; i < k; ++i) bits += ((w >> i) & 1ULL) ? '1' : '0';
          out.kv("word", bits);
        }
      }
    } else if (st->parsed()) {
      ComparatorPolicy pol = policy == "honest"   ? ComparatorPolicy::kHonest
                             : policy == "greedy" ? ComparatorPolicy::kGreedyMinimizingAdversary
                                                  : ComparatorPolicy::kRandomizedAdversary;
      if (policy != "honest" && policy != "greedy" && policy != "random") throw InvalidParameter("unknown policy " + policy);
      std::vector<double> values(k);
      for (auto& v : values) v = 4.0 * rng.uniform();
      ItemSet items(values);
      AdversarialComparator cmp(items, pol, rng());
      RoundOracle oracle(cmp);
      Transcript tr = better_multi_round(items, rounds, oracle, rng);
      out.kv("rounds", tr.rounds);
      out.kv("total_queries", static_cast<double>(tr.total_queries));
      out.kv("winner_id", tr.winner_id);
      out.kv("gap", tr.gap);
    } else if (sl->parsed()) {
      if (cn % 2 != 0) throw InvalidParameter("--domain must be even");
      std::vector<DiscreteDistribution> hyps;
      for (std::size_t i = 0; i < k; ++i) hyps.push_back(paninski(cn, std::min(0.49, sep), rng));
      const auto truth = static_cast<std::size_t>(rng.below(k));
      SampleSet x = sample(hyps[truth], static_cast<std::size_t>(users), rng);
      ProtocolLog log(x.size());
      std::size_t chosen = 0;
      if (ldp_method == "loglik") {
        chosen = ldp_loglik_select(hyps, x, eps, {}, rng, &log);
      } else if (ldp_method == "tournament") {
        chosen = ldp_select_tournament(hyps, x, eps, rounds, rng, 0, &log).chosen;
      } else {
        throw InvalidParameter("unknown method " + ldp_method);
      }
      out.kv("truth", static_cast<double>(truth));
      out.kv("chosen", static_cast<double>(chosen));
      out.kv("tv_to_truth", tv_distance(hyps[chosen], hyps[truth]));
      out.kv("messages", static_cast<double>(log.total_messages()));
      out.kv("single_use", log.each_user_at_most_once() ? "yes" : "no");
    } else if (is->parsed()) {
      IsingModel model = IsingModel::zeros(p);
      if (!model_file.empty()) {
        Json j = parse_json_file(model_file);
        try {
          model.A = j.at("A").get<Matrix>();
          model.theta = j.at("theta").get<Vector>();
        } catch (const Json::exception& e) {
          throw ConfigError(model_file + ": " + e.what());
        }
      } else {
        if (p < 2) throw InvalidParameter("--p must be >= 2");
        for (std::size_t i = 0; i + 1 < p; i += 2) model.A[i][i + 1] = model.A[i + 1][i] = eta / 2.0;
      }
      for (const auto& z : ising_gibbs(model, static_cast<std::size_t>(count), {}, {}, rng)) {
        for (std::size_t i = 0; i < z.size(); ++i) out.os() << (i ? " " : "") << z[i];
        out.os() << '\n';
      }
    } else if (il->parsed()) {
      std::ifstream in(spins_file);
      if (!in) throw ConfigError("cannot open " + spins_file);
      std::vector<Spins> samples;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        Spins z;
        int v = 0;
        while (ss >> v) {
          if (v != 1 && v != -1) throw ConfigError(spins_file + ":" + std::to_string(lineno) + ": spins must be +-1");
          z.push_back(v);
        }
        if (z.empty()) continue;
        if (!samples.empty() && z.size() != samples[0].size()) {
          throw ConfigError(spins_file + ":" + std::to_string(lineno) + ": row length differs");
        }
        samples.push_back(std::move(z));
      }
      const PrivacyBudget budget = make_budget(eps, delta, rho);
      IsingEstimate est = learn_ising_private(samples, lambda, budget, rng,
                                              iters > 0 ? std::optional<int>(static_cast<int>(iters)) : std::nullopt,
                                              symmetrize);
      for (std::size_t i = 0; i < est.A.size(); ++i) out.vec("A" + std::to_string(i + 1), est.A[i]);
      out.vec("theta", est.theta);
    } else if (fw->parsed()) {
      const PrivacyBudget budget = make_budget(eps, delta, rho);
      Vector w_true(p, 0.0);
      w_true[0] = lambda;
      LabeledDataset d;
      for (std::int64_t i = 0; i < count; ++i) {
        Vector x(p);
        for (auto& v : x) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
        d.add(x, rng.bernoulli(sigmoid(dot(w_true, x))) ? 1 : -1);
      }
      d = d.aggregated();
      const int T = iters > 0 ? static_cast<int>(iters) : default_fw_iterations(lambda, static_cast<double>(count), budget);
      FwResult res = private_frank_wolfe(d, L1Constraint{lambda}, budget, T, rng);
      out.kv("T", T);
      out.kv("noise_scale", res.noise_scale);
      out.kv("loss", logistic_loss(res.w, d));
      out.kv("loss_at_truth", logistic_loss(w_true, d));
      out.vec("w", res.w);
    } else if (cal->parsed()) {
      CalibrationSpec spec = default_calibration_spec();
      spec.seed = app.get_option("--seed")->count() ? g.seed : spec.seed;
      if (app.get_option("--trials")->count()) spec.trials = g.trials;
      CalibrationResult res = calibrate_constants(spec);
      std::ostream& os = out.os();
      os << "{\n  \"c\": " << format_number(res.constants.c) << ",\n  \"C1\": " << format_number(res.constants.C1)
         << ",\n  \"C2\": " << format_number(res.constants.C2) << ",\n  \"multiplier\": "
         << format_number(res.constants.multiplier) << ",\n  \"estimation_C\": " << format_number(res.estimation_C)
         << ",\n  \"closeness_expectation_C\": " << format_number(res.closeness_expectation_C)
         << ",\n  \"seed\": " << res.seed << "\n}\n";
    } else if (ex->parsed()) {
      if (g.config.empty()) throw ConfigError("experiment needs --config");
      ExperimentConfig cfg = parse_experiment_config(parse_json_file(g.config));
      if (app.get_option("--seed")->count()) cfg.seed = g.seed;
      if (app.get_option("--trials")->count()) cfg.trials = g.trials;
      if (!g.constants_file.empty()) cfg.constants = load_constants(g.constants_file);
      if (g.out.empty() && !cfg.out.empty()) {
        Output file(cfg.out);
        write_csv(run_experiment(cfg), file.os());
      } else {
        write_csv(run_experiment(cfg), out.os());
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
