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

// Approximate maximum selection with adversarial comparators, Scheffe tests
// and locally private hypothesis selection.

#ifndef DPDI_SELECTION_HPP_
#define DPDI_SELECTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

using ExactRational = boost::multiprecision::cpp_rational;

struct ItemSet {
  std::vector<double> values;
  std::vector<int> ids;

  explicit ItemSet(std::vector<double> v) : values(std::move(v)), ids(values.size()) {
    std::iota(ids.begin(), ids.end(), 0);
  }
  ItemSet(std::vector<double> v, std::vector<int> i) : values(std::move(v)), ids(std::move(i)) {
    if (ids.size() != values.size()) throw DimensionMismatch("ids and values differ in length");
  }
  std::size_t size() const { return values.size(); }
  double max_value() const { return *std::max_element(values.begin(), values.end()); }
};

// Answers single comparisons.  Returns the index of the winner (i or j).
class Comparator {
 public:
  virtual ~Comparator() = default;
  virtual std::size_t compare(std::size_t i, std::size_t j) = 0;
  // Hidden values, when the comparator has them.
  virtual const std::vector<double>* values() const { return nullptr; }
};

enum class ComparatorPolicy { kHonest, kRandomizedAdversary, kGreedyMinimizingAdversary, kScripted };

// Comparator over hidden values that must return the larger item whenever the
// values differ by more than 1 and is otherwise free to answer either way.
class AdversarialComparator : public Comparator {
 public:
  using Script = std::function<std::size_t(std::size_t, std::size_t)>;

  AdversarialComparator(const ItemSet& items, ComparatorPolicy policy, std::uint64_t seed = 0, Script script = {})
      : values_(items.values), policy_(policy), rng_(seed), script_(std::move(script)), wins_(items.size(), 0) {
    if (policy == ComparatorPolicy::kScripted && !script_) throw InvalidParameter("scripted policy needs a script");
  }

  std::size_t compare(std::size_t i, std::size_t j) override {
    const double xi = values_[i], xj = values_[j];
    const std::size_t truth = (xi > xj || (xi == xj && i < j)) ? i : j;
    std::size_t answer = truth;
    if (std::fabs(xi - xj) <= 1.0) {
      switch (policy_) {
        case ComparatorPolicy::kHonest:
          break;
        case ComparatorPolicy::kRandomizedAdversary:
          answer = rng_.bernoulli(0.5) ? i : j;
          break;
        case ComparatorPolicy::kGreedyMinimizingAdversary:
          // Demote whichever item has won more so far; ties go to the smaller value.
          if (wins_[i] != wins_[j]) {
            answer = wins_[i] < wins_[j] ? i : j;
          } else {
            answer = truth == i ? j : i;
          }
          break;
        case ComparatorPolicy::kScripted:
          answer = script_(i, j);
          if (answer != i && answer != j) throw ProtocolViolation("script answered a third item");
          break;
      }
    } else if (policy_ == ComparatorPolicy::kScripted && script_(i, j) != truth) {
      throw ProtocolViolation("script contradicted a comparison with gap > 1");
    }
    ++wins_[answer];
    return answer;
  }

  const std::vector<double>* values() const override { return &values_; }

 private:
  std::vector<double> values_;
  ComparatorPolicy policy_;
  Rng rng_;
  Script script_;
  std::vector<std::int64_t> wins_;
};

struct QueryRecord {
  std::size_t i = 0, j = 0, winner = 0;
  int round = 0;
};

// Round-structured access to a comparator.  A round is submitted as one
// batch, so no query of a round can depend on another answer of that round.
class RoundOracle {
 public:
  explicit RoundOracle(Comparator& cmp) : cmp_(cmp) {}

  std::vector<std::size_t> run_round(const std::vector<std::pair<std::size_t, std::size_t>>& queries) {
    if (open_) throw ProtocolViolation("nested round");
    open_ = true;
    std::vector<std::size_t> answers;
    answers.reserve(queries.size());
    if (!queries.empty()) ++rounds_;
    for (auto [i, j] : queries) {
      if (i == j) throw ProtocolViolation("item compared with itself");
      std::size_t w = cmp_.compare(i, j);
      answers.push_back(w);
      log_.push_back({i, j, w, rounds_});
    }
    if (!queries.empty()) per_round_.push_back(static_cast<std::int64_t>(queries.size()));
    open_ = false;
    return answers;
  }

  int rounds() const { return rounds_; }
  std::int64_t total_queries() const { return static_cast<std::int64_t>(log_.size()); }
  const std::vector<QueryRecord>& query_log() const { return log_; }
  const std::vector<std::int64_t>& per_round() const { return per_round_; }
  const Comparator& comparator() const { return cmp_; }

 private:
  Comparator& cmp_;
  bool open_ = false;
  int rounds_ = 0;
  std::vector<QueryRecord> log_;
  std::vector<std::int64_t> per_round_;
};

struct Transcript {
  int rounds = 0;
  std::int64_t total_queries = 0;
  std::vector<std::int64_t> per_round;
  std::size_t winner = 0;  // index into the item set
  int winner_id = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();  // max value - winner value
  std::size_t survivors_before_last = 0;
};

namespace internal {

inline Transcript finish(const RoundOracle& oracle, std::size_t winner, const std::vector<int>& ids) {
  Transcript t;
  t.rounds = oracle.rounds();
  t.total_queries = oracle.total_queries();
  t.per_round = oracle.per_round();
  t.winner = winner;
  t.winner_id = ids.empty() ? static_cast<int>(winner) : ids[winner];
  if (const auto* v = oracle.comparator().values()) {
    t.gap = *std::max_element(v->begin(), v->end()) - (*v)[winner];
  }
  return t;
}

// ceil(m^(1/root)) in exact integer arithmetic.
inline std::size_t ceil_root(std::size_t m, int root) {
  if (m <= 1) return m;
  auto g = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(m), 1.0 / root)));
  auto pow_ge = [&](std::size_t b) {
    boost::multiprecision::cpp_int v = 1;
    for (int i = 0; i < root; ++i) v *= b;
    return v >= m;
  };
  while (g > 1 && pow_ge(g - 1)) --g;
  while (!pow_ge(g)) ++g;
  return g;
}

// One round of round-robins inside every group; returns the group winners in
// group order.  Win ties go to the lowest id.
inline std::vector<std::size_t> group_round(const std::vector<std::vector<std::size_t>>& groups,
                                            RoundOracle& oracle, const std::vector<int>& ids) {
  std::vector<std::pair<std::size_t, std::size_t>> queries;
  for (const auto& g : groups) {
    for (std::size_t a = 0; a < g.size(); ++a) {
      for (std::size_t b = a + 1; b < g.size(); ++b) queries.emplace_back(g[a], g[b]);
    }
  }
  auto answers = oracle.run_round(queries);
  std::vector<std::int64_t> wins(ids.size(), 0);
  for (auto w : answers) ++wins[w];
  std::vector<std::size_t> winners;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    std::size_t best = g[0];
    for (auto x : g) {
      if (wins[x] > wins[best] || (wins[x] == wins[best] && ids[x] < ids[best])) best = x;
    }
    winners.push_back(best);
  }
  return winners;
}

inline std::vector<std::vector<std::size_t>> partition(const std::vector<std::size_t>& items, std::size_t size) {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < items.size(); s += size) {
    groups.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(s),
                        items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), s + size)));
  }
  return groups;
}

// Runs the partition stages t, t-1, ..., stop+1 and returns the survivors.
inline std::vector<std::size_t> multi_round_stages(std::vector<std::size_t> survivors, int t, int stop,
                                                   RoundOracle& oracle, const std::vector<int>& ids) {
  for (int s = t; s > stop && survivors.size() > 1; --s) {
    const int root = (1 << s) - 1;
    const std::size_t g = std::max<std::size_t>(2, ceil_root(survivors.size(), root));
    survivors = group_round(partition(survivors, g), oracle, ids);
  }
  return survivors;
}

}  // namespace internal

inline Transcript round_robin(const std::vector<std::size_t>& members, RoundOracle& oracle,
                              const std::vector<int>& ids) {
  if (members.empty()) throw EmptyInput("round robin over no items");
  auto w = internal::group_round({members}, oracle, ids);
  return internal::finish(oracle, w[0], ids);
}

inline Transcript round_robin(const ItemSet& items, RoundOracle& oracle) {
  if (items.size() == 0) throw EmptyInput("round robin over no items");
  std::vector<std::size_t> all(items.size());
  std::iota(all.begin(), all.end(), 0);
  return round_robin(all, oracle, items.ids);
}

// Group size ceil(m^{1/(2^s-1)}) at stage s; the last group takes the remainder.
inline Transcript multi_round(const ItemSet& items, int t, RoundOracle& oracle) {
  if (items.size() == 0) throw EmptyInput("tournament over no items");
  if (t < 1) throw InvalidParameter("t must be >= 1");
  std::vector<std::size_t> all(items.size());
  std::iota(all.begin(), all.end(), 0);
  auto survivors = internal::multi_round_stages(all, t, 1, oracle, items.ids);
  std::size_t before_last = survivors.size();
  Transcript tr = round_robin(survivors, oracle, items.ids);
  tr.survivors_before_last = before_last;
  return tr;
}

inline std::size_t better_multi_round_h_size(std::size_t k, int t, double h_constant = 100.0) {
  const double exponent = std::ldexp(1.0, t - 1) / (std::ldexp(1.0, t) - 1.0);
  double h = h_constant * std::ceil(std::pow(static_cast<double>(k), exponent) - 1e-9);
  return static_cast<std::size_t>(std::min(static_cast<double>(k), h));
}

// Multi-round on a random permutation halted before its last round, then a
// round-robin over the survivors joined with a random subset H.
inline Transcript better_multi_round(const ItemSet& items, int t, RoundOracle& oracle, Rng& rng,
                                     double h_constant = 100.0) {
  if (items.size() == 0) throw EmptyInput("tournament over no items");
  if (t < 1) throw InvalidParameter("t must be >= 1");
  const std::size_t k = items.size();
  if (t == 1) return round_robin(items, oracle);
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = k; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  auto survivors = internal::multi_round_stages(perm, t, 1, oracle, items.ids);
  const std::size_t before_last = survivors.size();
  std::vector<char> chosen(k, 0);
  for (auto s : survivors) chosen[s] = 1;
  const std::size_t h = better_multi_round_h_size(k, t, h_constant);
  std::vector<std::size_t> pool(k);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < h; ++i) {
    std::swap(pool[i], pool[i + rng.below(k - i)]);
    chosen[pool[i]] = 1;
  }
  std::vector<std::size_t> finalists;
  for (std::size_t i = 0; i < k; ++i) {
    if (chosen[i]) finalists.push_back(i);
  }
  Transcript tr = round_robin(finalists, oracle, items.ids);
  tr.survivors_before_last = before_last;
  return tr;
}

// Worst winner value of round_robin over every answer assignment to the close
// pairs (|x_i - x_j| <= 1).
inline double round_robin_exhaustive_worst(const std::vector<double>& values) {
  const std::size_t k = values.size();
  if (k == 0) throw EmptyInput("no items");
  std::vector<std::pair<std::size_t, std::size_t>> close;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (std::fabs(values[i] - values[j]) <= 1.0) close.emplace_back(i, j);
    }
  }
  if (close.size() > 24) throw TooLarge("too many close pairs to enumerate");
  ItemSet items(values);
  double worst = kInf;
  for (std::uint64_t mask = 0; mask < (1ULL << close.size()); ++mask) {
    auto script = [&](std::size_t i, std::size_t j) {
      auto a = std::min(i, j), b = std::max(i, j);
      auto it = std::find(close.begin(), close.end(), std::make_pair(a, b));
      if (it == close.end()) return values[i] > values[j] ? i : j;
      return ((mask >> (it - close.begin())) & 1ULL) ? b : a;
    };
    AdversarialComparator cmp(items, ComparatorPolicy::kScripted, 0, script);
    RoundOracle oracle(cmp);
    worst = std::min(worst, values[round_robin(items, oracle).winner]);
  }
  return worst;
}

// Closed recursion for multi_round's query count at perfect powers
// k = b^{2^t - 1}.
inline std::int64_t multi_round_query_recursion(std::int64_t k, int t) {
  if (t <= 1 || k <= 1) return k * (k - 1) / 2;
  const int root = (1 << t) - 1;
  const auto g = static_cast<std::int64_t>(internal::ceil_root(static_cast<std::size_t>(k), root));
  return (k / g) * (g * (g - 1) / 2) + multi_round_query_recursion(k / g, t - 1);
}

// ---- Scheffe tests ----

inline std::vector<char> scheffe_set(const DiscreteDistribution& q1, const DiscreteDistribution& q2) {
  if (q1.k() != q2.k()) throw DimensionMismatch("hypotheses differ in k");
  std::vector<char> s(q1.k());
  for (std::size_t i = 0; i < q1.k(); ++i) s[i] = q1[i] > q2[i] ? 1 : 0;
  return s;
}

inline double set_mass(const DiscreteDistribution& q, const std::vector<char>& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < q.k(); ++i) {
    if (s[i]) m += q[i];
  }
  return m;
}

// 1 picks q1, 2 picks q2.  Ties go to q2.
inline int scheffe_decide(double p_hat, double q1_mass, double q2_mass) {
  return std::fabs(q1_mass - p_hat) < std::fabs(q2_mass - p_hat) ? 1 : 2;
}

inline int scheffe(const SampleSet& samples, const DiscreteDistribution& q1, const DiscreteDistribution& q2) {
  auto s = scheffe_set(q1, q2);
  if (samples.empty()) throw InsufficientSamples("scheffe needs samples");
  double hits = 0.0;
  for (int x : samples) hits += s[static_cast<std::size_t>(x - 1)];
  return scheffe_decide(hits / static_cast<double>(samples.size()), set_mass(q1, s), set_mass(q2, s));
}

// Records how many messages each user sent.
class ProtocolLog {
 public:
  explicit ProtocolLog(std::size_t users = 0) : messages_(users, 0) {}
  void resize(std::size_t users) { messages_.assign(users, 0); }
  void message(std::size_t user, int round) {
    if (user >= messages_.size()) messages_.resize(user + 1, 0);
    ++messages_[user];
    max_round_ = std::max(max_round_, round);
  }
  bool each_user_at_most_once() const {
    return std::all_of(messages_.begin(), messages_.end(), [](int m) { return m <= 1; });
  }
  std::int64_t total_messages() const { return std::accumulate(messages_.begin(), messages_.end(), std::int64_t{0}); }
  int rounds() const { return max_round_; }

 private:
  std::vector<int> messages_;
  int max_round_ = 0;
};

// Every user sends RR(1{X in S}); the curator debiases the mean and runs the
// Scheffe decision.  `first_user` is the global index of users[0] for logging.
inline int ldp_scheffe(const SampleSet& users, const DiscreteDistribution& q1, const DiscreteDistribution& q2,
                       double epsilon, Rng& rng, ProtocolLog* log = nullptr, std::size_t first_user = 0,
                       int round = 1) {
  if (users.empty()) throw GroupTooSmall("ldp_scheffe needs at least one user");
  auto s = scheffe_set(q1, q2);
  double ones = 0.0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    ones += randomized_response(s[static_cast<std::size_t>(users[u] - 1)], epsilon, rng);
    if (log) log->message(first_user + u, round);
  }
  double p_hat = rr_debias(ones / static_cast<double>(users.size()), epsilon);
  return scheffe_decide(p_hat, set_mass(q1, s), set_mass(q2, s));
}

// ---- Flattening ----

// phi = (phi' + U[N'])/2 where phi' sends a to a uniform point of a block of
// ceil(M(a) N) cells, M(a) = max_i q_i(a).  Symbols with M(a) = 0 go to U[N'].
struct Flattening {
  std::size_t n_domain = 0;
  std::size_t n_prime = 0;
  std::vector<std::size_t> block_start, block_size;
  std::vector<DiscreteDistribution> pushed;

  int map(int symbol, Rng& rng) const {
    auto a = static_cast<std::size_t>(symbol - 1);
    if (rng.bernoulli(0.5) || block_size[a] == 0) return static_cast<int>(rng.below(n_prime)) + 1;
    return static_cast<int>(block_start[a] + rng.below(block_size[a])) + 1;
  }
};

inline std::vector<std::size_t> flatten_block_sizes(const std::vector<DiscreteDistribution>& q) {
  if (q.empty()) throw EmptyInput("no hypotheses");
  const std::size_t n = q[0].k();
  std::vector<std::size_t> sizes(n);
  for (std::size_t a = 0; a < n; ++a) {
    ExactRational m = 0;
    for (const auto& qi : q) {
      if (qi.k() != n) throw DimensionMismatch("hypotheses differ in k");
      m = std::max(m, ExactRational(qi[a]));
    }
    ExactRational scaled = m * static_cast<long long>(n);
    boost::multiprecision::cpp_int fl = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
    if (ExactRational(fl) < scaled) fl += 1;
    sizes[a] = fl.convert_to<std::size_t>();
  }
  return sizes;
}

// Exact pushforward masses of every hypothesis.
inline std::vector<std::vector<ExactRational>> flatten_pushforward_exact(const std::vector<DiscreteDistribution>& q) {
  auto sizes = flatten_block_sizes(q);
  std::size_t n_prime = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::vector<ExactRational>> out;
  for (const auto& qi : q) {
    std::vector<ExactRational> masses(n_prime, ExactRational(1, 2) / static_cast<long long>(n_prime));
    std::size_t start = 0;
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      for (std::size_t b = 0; b < sizes[a]; ++b) {
        masses[start + b] += ExactRational(qi[a]) / 2 / static_cast<long long>(sizes[a]);
      }
      start += sizes[a];
    }
    out.push_back(std::move(masses));
  }
  return out;
}

inline Flattening flatten(const std::vector<DiscreteDistribution>& q) {
  Flattening f;
  f.block_size = flatten_block_sizes(q);
  f.n_domain = q[0].k();
  f.block_start.resize(f.block_size.size());
  std::size_t start = 0;
  for (std::size_t a = 0; a < f.block_size.size(); ++a) {
    f.block_start[a] = start;
    start += f.block_size[a];
  }
  f.n_prime = start;
  for (const auto& masses : flatten_pushforward_exact(q)) {
    std::vector<double> d(masses.size());
    for (std::size_t b = 0; b < d.size(); ++b) d[b] = masses[b].convert_to<double>();
    f.pushed.push_back(normalized(std::move(d)));
  }
  return f;
}

// max over hypotheses and cells of |ln(gamma(b)/q_i(b))|, gamma = U[N'].
inline double loglik_range(const Flattening& f) {
  double l = 0.0;
  const double gamma = 1.0 / static_cast<double>(f.n_prime);
  for (const auto& q : f.pushed) {
    for (double m : q.probs()) l = std::max(l, std::fabs(std::log(gamma / m)));
  }
  return l;
}

// Non-interactive selection: users are split into k groups; user j of group
// i sends ln(gamma(phi(X))/q_i'(phi(X))) + Lap(L/eps).  Returns argmin of the
// group means (0-based).
inline std::size_t ldp_loglik_select(const std::vector<DiscreteDistribution>& q, const SampleSet& users,
                                     double epsilon, std::optional<double> range, Rng& rng,
                                     ProtocolLog* log = nullptr) {
  const std::size_t k = q.size();
  if (k == 0) throw EmptyInput("no hypotheses");
  const std::size_t group = users.size() / k;
  if (group == 0) throw GroupTooSmall("fewer users than hypotheses");
  Flattening f = flatten(q);
  const double l = range ? *range : loglik_range(f);
  const double scale = std::isinf(epsilon) ? 0.0 : l / epsilon;
  const double log_gamma = -std::log(static_cast<double>(f.n_prime));
  std::vector<double> means(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < group; ++j) {
      const std::size_t u = i * group + j;
      int y = f.map(users[u], rng);
      double msg = log_gamma - std::log(f.pushed[i].prob(y));
      sum += msg + rng.laplace(scale);
      if (log) log->message(u, 1);
    }
    means[i] = sum / static_cast<double>(group);
  }
  return static_cast<std::size_t>(std::min_element(means.begin(), means.end()) - means.begin());
}

// Comparator whose every answer is an ldp_scheffe run on a fresh, disjoint
// block of users.
class LdpScheffeComparator : public Comparator {
 public:
  LdpScheffeComparator(const std::vector<DiscreteDistribution>& q, const SampleSet& users, std::size_t group_size,
                       double epsilon, Rng& rng, ProtocolLog* log)
      : q_(q), users_(users), group_(group_size), eps_(epsilon), rng_(rng), log_(log) {}

  std::size_t compare(std::size_t i, std::size_t j) override {
    if (next_ + group_ > users_.size()) throw GroupTooSmall("user pool exhausted");
    SampleSet block(users_.begin() + static_cast<std::ptrdiff_t>(next_),
                    users_.begin() + static_cast<std::ptrdiff_t>(next_ + group_));
    int pick = ldp_scheffe(block, q_[i], q_[j], eps_, rng_, log_, next_, round_);
    next_ += group_;
    return pick == 1 ? i : j;
  }

  void set_round(int r) { round_ = r; }
  std::size_t users_used() const { return next_; }

 private:
  const std::vector<DiscreteDistribution>& q_;
  const SampleSet& users_;
  std::size_t group_;
  double eps_;
  Rng& rng_;
  ProtocolLog* log_;
  std::size_t next_ = 0;
  int round_ = 1;
};

// Largest number of comparisons better_multi_round can issue on k items.
inline std::int64_t better_multi_round_max_queries(std::size_t k, int t, double h_constant = 100.0) {
  if (k <= 1) return 0;
  if (t <= 1) return static_cast<std::int64_t>(k * (k - 1) / 2);
  std::int64_t q = 0;
  std::size_t m = k;
  for (int s = t; s > 1 && m > 1; --s) {
    const std::size_t g = std::max<std::size_t>(2, internal::ceil_root(m, (1 << s) - 1));
    const std::size_t full = m / g, rest = m % g;
    q += static_cast<std::int64_t>(full * g * (g - 1) / 2 + rest * (rest - 1) / 2);
    m = full + (rest > 0 ? 1 : 0);
  }
  const std::size_t fin = std::min(k, m + better_multi_round_h_size(k, t, h_constant));
  return q + static_cast<std::int64_t>(fin * (fin - 1) / 2);
}

// Hoeffding group size so that each debiased estimate lands within alpha/2
// of p(S) except with probability 1/(10 m).
inline std::size_t ldp_tournament_group_size(std::int64_t comparisons, double epsilon, double alpha) {
  const double e = std::exp(epsilon);
  const double c = std::isinf(epsilon) ? 1.0 : (e + 1.0) / (e - 1.0);
  const double m = static_cast<double>(std::max<std::int64_t>(comparisons, 1));
  return static_cast<std::size_t>(std::ceil(2.0 * c * c * std::log(20.0 * m) / (alpha * alpha)));
}

struct LdpSelection {
  std::size_t chosen = 0;
  Transcript transcript;
  std::size_t users_used = 0;
};

// better_multi_round over the hypotheses with LDP Scheffe comparisons.  When
// group_size is 0 the users are divided evenly over the worst-case number of
// comparisons.
inline LdpSelection ldp_select_tournament(const std::vector<DiscreteDistribution>& q, const SampleSet& users,
                                          double epsilon, int t, Rng& rng, std::size_t group_size = 0,
                                          ProtocolLog* log = nullptr) {
  if (q.empty()) throw EmptyInput("no hypotheses");
  const std::int64_t worst = better_multi_round_max_queries(q.size(), t);
  if (group_size == 0) group_size = worst > 0 ? users.size() / static_cast<std::size_t>(worst) : users.size();
  if (group_size == 0) throw GroupTooSmall("not enough users for one per comparison");
  if (static_cast<std::size_t>(worst) * group_size > users.size()) {
    throw GroupTooSmall("need " + std::to_string(worst * static_cast<std::int64_t>(group_size)) + " users");
  }
  LdpScheffeComparator cmp(q, users, group_size, epsilon, rng, log);
  ItemSet items(std::vector<double>(q.size(), 0.0));
  // Round numbers in the protocol log follow the oracle's rounds.
  struct RoundTracking : Comparator {
    LdpScheffeComparator& inner;
    RoundOracle* oracle = nullptr;
    explicit RoundTracking(LdpScheffeComparator& c) : inner(c) {}
    std::size_t compare(std::size_t i, std::size_t j) override {
      inner.set_round(oracle->rounds());
      return inner.compare(i, j);
    }
  } tracking(cmp);
  RoundOracle tracked(tracking);
  tracking.oracle = &tracked;
  LdpSelection out;
  out.transcript = better_multi_round(items, t, tracked, rng);
  out.chosen = out.transcript.winner;
  out.users_used = cmp.users_used();
  return out;
}

}  // namespace dpdi

#endif  // DPDI_SELECTION_HPP_
