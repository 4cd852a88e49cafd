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

// Discrete distributions, samples, histograms, profiles and distances.

#ifndef DPDI_DISTRIBUTION_HPP_
#define DPDI_DISTRIBUTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dpdi/errors.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

// A sequence of symbols from the alphabet {1, ..., k}.
using SampleSet = std::vector<int>;

// Probability vector over {1, ..., k}.  Index 0 of probs() is symbol 1.
class DiscreteDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidParameter("distribution needs k >= 1");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw InvalidParameter("probabilities must be finite and non-negative");
      }
      total += p;
    }
    if (std::fabs(total - 1.0) > kSumTolerance * std::max<double>(1.0, probs_.size())) {
      throw InvalidParameter("probabilities sum to " + std::to_string(total));
    }
    cdf_.resize(probs_.size());
    std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
    last_positive_ = probs_.size() - 1;
    while (probs_[last_positive_] == 0.0) --last_positive_;
  }

  std::size_t k() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t index) const { return probs_[index]; }
  // Mass of symbol s in {1..k}.
  double prob(int s) const { return probs_[static_cast<std::size_t>(s - 1)]; }

  // One draw, by inversion of the cumulative distribution.
  int draw(Rng& rng) const {
    double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    auto index = static_cast<std::size_t>(it - cdf_.begin());
    if (index > last_positive_) index = last_positive_;
    return static_cast<int>(index) + 1;
  }

  bool operator==(const DiscreteDistribution& other) const { return probs_ == other.probs_; }

 private:
  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

// Per-symbol multiplicities M_x.  counts[x-1] is the count of symbol x.
struct Histogram {
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;

  Histogram() = default;
  explicit Histogram(std::vector<std::int64_t> c) : counts(std::move(c)) {
    for (auto v : counts) {
      if (v < 0) throw InvalidParameter("negative count");
      n += v;
    }
  }

  static Histogram from_samples(const SampleSet& samples, std::size_t k) {
    Histogram h;
    h.counts.assign(k, 0);
    for (int s : samples) {
      if (s < 1 || static_cast<std::size_t>(s) > k) {
        throw InvalidParameter("symbol " + std::to_string(s) + " outside [1, " +
                               std::to_string(k) + "]");
      }
      ++h.counts[static_cast<std::size_t>(s - 1)];
    }
    h.n = static_cast<std::int64_t>(samples.size());
    return h;
  }

  std::size_t k() const { return counts.size(); }

  std::int64_t distinct() const {
    return std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  }
};

// Counts of counts: phi[i] is the number of symbols seen exactly i times.
// phi[0] = k - (number of distinct symbols observed).
struct Profile {
  std::vector<std::int64_t> phi;
  std::int64_t n = 0;

  static Profile from_histogram(const Histogram& h) {
    Profile p;
    std::int64_t top = 0;
    for (auto c : h.counts) top = std::max(top, c);
    p.phi.assign(static_cast<std::size_t>(top) + 1, 0);
    for (auto c : h.counts) ++p.phi[static_cast<std::size_t>(c)];
    p.n = h.n;
    return p;
  }

  std::int64_t operator[](std::size_t i) const { return i < phi.size() ? phi[i] : 0; }

  // A histogram with this profile, symbols sorted by decreasing count.
  Histogram to_histogram() const {
    std::vector<std::int64_t> counts;
    for (std::size_t i = phi.size(); i-- > 0;) counts.insert(counts.end(), phi[i], static_cast<std::int64_t>(i));
    return Histogram(std::move(counts));
  }
};

enum class Divergence { TV, KL, CHI2, L2 };

inline double divergence(const DiscreteDistribution& p, const DiscreteDistribution& q,
                         Divergence kind) {
  if (p.k() != q.k()) throw DimensionMismatch("divergence between k=" + std::to_string(p.k()) +
                                              " and k=" + std::to_string(q.k()));
  double acc = 0.0;
  for (std::size_t i = 0; i < p.k(); ++i) {
    double a = p[i], b = q[i];
    switch (kind) {
      case Divergence::TV:
        acc += std::fabs(a - b);
        break;
      case Divergence::L2:
        acc += (a - b) * (a - b);
        break;
      case Divergence::KL:
      case Divergence::CHI2:
        if (b == 0.0) {
          if (a > 0.0) throw AbsoluteContinuityViolation("q(x)=0 < p(x) at symbol " + std::to_string(i + 1));
          break;
        }
        if (kind == Divergence::KL) {
          if (a > 0.0) acc += a * std::log(a / b);
        } else {
          acc += (a - b) * (a - b) / b;
        }
        break;
    }
  }
  switch (kind) {
    case Divergence::TV: return std::min(1.0, 0.5 * acc);
    case Divergence::L2: return std::sqrt(acc);
    default: return std::max(0.0, acc);
  }
}

inline double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return divergence(p, q, Divergence::TV);
}

// Shannon entropy in nats.
inline double entropy(const DiscreteDistribution& p) {
  double h = 0.0;
  for (double x : p.probs()) if (x > 0.0) h -= x * std::log(x);
  return h;
}

template <class Seq>
std::int64_t hamming(const Seq& x, const Seq& y) {
  if (x.size() != y.size()) throw DimensionMismatch("hamming on lengths " + std::to_string(x.size()) +
                                                    " and " + std::to_string(y.size()));
  std::int64_t d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] != y[i]);
  return d;
}

inline SampleSet sample(const DiscreteDistribution& p, std::size_t n, Rng& rng) {
  SampleSet out(n);
  for (auto& s : out) s = p.draw(rng);
  return out;
}

// Length ~ Poisson(rate), then i.i.d. draws.
inline SampleSet poissonized_sample(const DiscreteDistribution& p, double rate, Rng& rng) {
  return sample(p, static_cast<std::size_t>(rng.poisson(rate)), rng);
}

// Euclidean projection onto the probability simplex (sort and threshold).
inline DiscreteDistribution project_to_simplex(const std::vector<double>& v) {
  if (v.empty()) throw InvalidParameter("empty vector");
  for (double x : v) if (!std::isfinite(x)) throw InvalidParameter("non-finite entry");
  if (std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; }) &&
      std::fabs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) <= DiscreteDistribution::kSumTolerance) {
    return DiscreteDistribution(v);
  }
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::max(v[i] - theta, 0.0);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return DiscreteDistribution(std::move(w));
}

// ---- Distribution families ----

inline DiscreteDistribution uniform(std::size_t k) {
  if (k == 0) throw InvalidParameter("uniform needs k >= 1");
  return DiscreteDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

inline DiscreteDistribution normalized(std::vector<double> w) {
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw InvalidParameter("weights sum to zero");
  for (double& x : w) x /= total;
  return DiscreteDistribution(std::move(w));
}

// p(i) proportional to i^(-s).
inline DiscreteDistribution zipf(std::size_t k, double s) {
  if (k == 0) throw InvalidParameter("zipf needs k >= 1");
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = std::pow(static_cast<double>(i + 1), -s);
  return normalized(std::move(w));
}

// First half of the alphabet three times as likely as the second half.
inline DiscreteDistribution two_step(std::size_t k) {
  if (k == 0) throw InvalidParameter("two_step needs k >= 1");
  std::vector<double> w(k, 1.0);
  for (std::size_t i = 0; i < k / 2; ++i) w[i] = 3.0;
  return normalized(std::move(w));
}

inline DiscreteDistribution dirichlet_draw(std::size_t k, double concentration, Rng& rng) {
  if (k == 0 || !(concentration > 0.0)) throw InvalidParameter("dirichlet needs k >= 1, conc > 0");
  std::vector<double> w(k);
  double total = 0.0;
  do {
    total = 0.0;
    for (double& x : w) total += (x = rng.gamma(concentration));
  } while (!(total > 0.0));
  return normalized(std::move(w));
}

// p_z(2i-1) = (1 + 2 alpha z_i)/k, p_z(2i) = (1 - 2 alpha z_i)/k, z in {-1,+1}^(k/2).
inline DiscreteDistribution paninski(std::size_t k, double alpha, const std::vector<int>& z) {
  if (k == 0 || k % 2 != 0) throw InvalidParameter("paninski needs even k");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw InvalidParameter("paninski needs 0 <= alpha < 1/2");
  if (z.size() != k / 2) throw InvalidParameter("z must have k/2 entries");
  std::vector<double> w(k);
  const double kk = static_cast<double>(k);
  for (std::size_t i = 0; i < k / 2; ++i) {
    if (z[i] != 1 && z[i] != -1) throw InvalidParameter("z entries must be +-1");
    w[2 * i] = (1.0 + 2.0 * alpha * z[i]) / kk;
    w[2 * i + 1] = (1.0 - 2.0 * alpha * z[i]) / kk;
  }
  return DiscreteDistribution(std::move(w));
}

inline std::vector<int> random_signs(std::size_t m, Rng& rng) {
  std::vector<int> z(m);
  for (int& v : z) v = rng.bernoulli(0.5) ? 1 : -1;
  return z;
}

inline DiscreteDistribution paninski(std::size_t k, double alpha, Rng& rng) {
  if (k % 2 != 0) throw InvalidParameter("paninski needs even k");
  return paninski(k, alpha, random_signs(k / 2, rng));
}

// p(1) = 2/3 and q(1) = (2 - eta)/3; remaining mass spread evenly.
inline std::pair<DiscreteDistribution, DiscreteDistribution> entropy_lb_pair(std::size_t k,
                                                                              double eta) {
  if (k < 2) throw InvalidParameter("entropy_lb_pair needs k >= 2");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParameter("entropy_lb_pair needs 0 < eta <= 1");
  const double rest = static_cast<double>(k - 1);
  std::vector<double> p(k, (1.0 / 3.0) / rest), q(k, ((1.0 + eta) / 3.0) / rest);
  p[0] = 2.0 / 3.0;
  q[0] = (2.0 - eta) / 3.0;
  return {DiscreteDistribution(std::move(p)), DiscreteDistribution(std::move(q))};
}

// u1 = U[m(1+alpha)]; u2 puts 1/(m(1+alpha)) on each of [m] and alpha/(1+alpha)
// on one extra symbol.  Both live on an alphabet of size m(1+alpha)+1 whose last
// symbol is the extra one.
inline std::pair<DiscreteDistribution, DiscreteDistribution> coverage_lb_pair(std::size_t m,
                                                                               double alpha) {
  if (m == 0 || !(alpha > 0.0)) throw InvalidParameter("coverage_lb_pair needs m >= 1, alpha > 0");
  const double support = static_cast<double>(m) * (1.0 + alpha);
  const double rounded = std::round(support);
  if (std::fabs(support - rounded) > 1e-9 || rounded <= static_cast<double>(m)) {
    throw InvalidParameter("m(1+alpha) must be an integer larger than m");
  }
  const auto big = static_cast<std::size_t>(rounded);
  std::vector<double> u1(big + 1, 1.0 / rounded), u2(big + 1, 0.0);
  u1[big] = 0.0;
  for (std::size_t i = 0; i < m; ++i) u2[i] = 1.0 / rounded;
  u2[big] = alpha / (1.0 + alpha);
  return {DiscreteDistribution(std::move(u1)), DiscreteDistribution(std::move(u2))};
}

}  // namespace dpdi

#endif  // DPDI_DISTRIBUTION_HPP_
