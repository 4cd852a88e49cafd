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

// Couplings between dataset laws, their Monte-Carlo Hamming verifier,
// constant-weight codes and the lower-bound calculators built on them.

#ifndef DPDI_COUPLINGS_HPP_
#define DPDI_COUPLINGS_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
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

struct CouplingDraw {
  SampleSet x, y;
};

// A joint sampler for (X^n, Y^n) with declared marginals and a declared bound
// on E[hamming(X^n, Y^n)].
class Coupling {
 public:
  using Sampler = std::function<CouplingDraw(Rng&)>;

  Coupling(std::string law_x, std::string law_y, std::size_t n, double d_bound, Sampler sampler)
      : law_x_(std::move(law_x)), law_y_(std::move(law_y)), n_(n), d_bound_(d_bound), sampler_(std::move(sampler)) {}

  CouplingDraw draw(Rng& rng) const { return sampler_(rng); }
  const std::string& law_x() const { return law_x_; }
  const std::string& law_y() const { return law_y_; }
  std::size_t n() const { return n_; }
  double d_bound() const { return d_bound_; }

 private:
  std::string law_x_, law_y_;
  std::size_t n_;
  double d_bound_;
  Sampler sampler_;
};

// X ~ Bern(b1)^n, Y ~ Bern(b2)^n with Y_i >= X_i.  Symbols are the bits 0/1.
inline Coupling coin_coupling(double b1, double b2, std::size_t n) {
  if (!(b1 >= 0.0 && b1 <= b2 && b2 <= 1.0)) throw InvalidParameter("coin coupling needs 0 <= b1 <= b2 <= 1");
  const double lift = b1 < 1.0 ? (b2 - b1) / (1.0 - b1) : 0.0;
  auto sampler = [b1, lift, n](Rng& rng) {
    CouplingDraw d{SampleSet(n), SampleSet(n)};
    for (std::size_t i = 0; i < n; ++i) {
      d.x[i] = rng.bernoulli(b1) ? 1 : 0;
      d.y[i] = d.x[i] == 1 ? 1 : (rng.bernoulli(lift) ? 1 : 0);
    }
    return d;
  };
  return Coupling("Bern(" + std::to_string(b1) + ")^n", "Bern(" + std::to_string(b2) + ")^n", n,
                  static_cast<double>(n) * (b2 - b1), sampler);
}

// Per-coordinate maximal coupling: agree with probability 1 - TV(p, q).
inline Coupling maximal_coupling(const DiscreteDistribution& p, const DiscreteDistribution& q, std::size_t n) {
  const double tv = tv_distance(p, q);
  std::vector<double> common(p.k()), rest_p(p.k()), rest_q(p.k());
  double common_mass = 0.0, rp = 0.0, rq = 0.0;
  for (std::size_t i = 0; i < p.k(); ++i) {
    common[i] = std::min(p[i], q[i]);
    rest_p[i] = std::max(p[i] - q[i], 0.0);
    rest_q[i] = std::max(q[i] - p[i], 0.0);
    common_mass += common[i];
    rp += rest_p[i];
    rq += rest_q[i];
  }
  struct Parts {
    std::optional<DiscreteDistribution> common, rest_p, rest_q;
    double agree = 0.0;
  };
  auto parts = std::make_shared<Parts>();
  parts->agree = common_mass;
  if (common_mass > 0.0) parts->common = normalized(common);
  if (rp > 0.0 && rq > 0.0) {
    parts->rest_p = normalized(rest_p);
    parts->rest_q = normalized(rest_q);
  } else {
    parts->agree = 1.0;
  }
  auto sampler = [parts, n](Rng& rng) {
    CouplingDraw d{SampleSet(n), SampleSet(n)};
    for (std::size_t i = 0; i < n; ++i) {
      if (parts->agree >= 1.0 || (parts->common && rng.uniform() < parts->agree)) {
        d.x[i] = d.y[i] = parts->common->draw(rng);
      } else {
        d.x[i] = parts->rest_p->draw(rng);
        d.y[i] = parts->rest_q->draw(rng);
      }
    }
    return d;
  };
  return Coupling("p^n", "q^n", n, static_cast<double>(n) * tv, sampler);
}

// ---- P1 = Bern(1/2)^t versus P2 = (Bern(1/2-a)^t + Bern(1/2+a)^t)/2 ----

// Exact TV by Hamming-weight classes.
inline ExactRational binomial_tv_exact(int t, double alpha) {
  if (t > 30) throw TooLarge("binomial_tv enumerates t <= 30");
  if (t < 0) throw InvalidParameter("t must be >= 0");
  const ExactRational a(alpha), half(1, 2);
  const ExactRational lo = half - a, hi = half + a;
  ExactRational p1 = 1;
  for (int i = 0; i < t; ++i) p1 *= half;
  ExactRational total = 0;
  boost::multiprecision::cpp_int choose = 1;
  for (int w = 0; w <= t; ++w) {
    ExactRational a1 = 1, a2 = 1;
    for (int i = 0; i < w; ++i) {
      a1 *= lo;
      a2 *= hi;
    }
    for (int i = w; i < t; ++i) {
      a1 *= hi;
      a2 *= lo;
    }
    ExactRational diff = p1 - (a1 + a2) / 2;
    if (diff < 0) diff = -diff;
    total += ExactRational(choose) * diff;
    choose = choose * (t - w) / (w + 1);
  }
  return total / 2;
}

inline double binomial_tv(int t, double alpha) { return binomial_tv_exact(t, alpha).convert_to<double>(); }

// Law of max{N, t - N}: index z in [0, t], zero below ceil(t/2).
inline std::vector<ExactRational> max_count_pmf_exact(int t, double alpha) {
  const ExactRational a(alpha), half(1, 2);
  const ExactRational lo = half - a, hi = half + a;
  std::vector<ExactRational> n_pmf(static_cast<std::size_t>(t) + 1);
  boost::multiprecision::cpp_int choose = 1;
  for (int w = 0; w <= t; ++w) {
    ExactRational a1 = 1, a2 = 1;
    for (int i = 0; i < w; ++i) {
      a1 *= lo;
      a2 *= hi;
    }
    for (int i = w; i < t; ++i) {
      a1 *= hi;
      a2 *= lo;
    }
    n_pmf[static_cast<std::size_t>(w)] = ExactRational(choose) * (a1 + a2) / 2;
    choose = choose * (t - w) / (w + 1);
  }
  std::vector<ExactRational> z(static_cast<std::size_t>(t) + 1, ExactRational(0));
  for (int w = 0; w <= t; ++w) z[static_cast<std::size_t>(std::max(w, t - w))] += n_pmf[static_cast<std::size_t>(w)];
  return z;
}

// True when P(Z2 >= l) >= P(Z1 >= l) for every l, computed exactly.
inline bool max_count_dominates(int t, double alpha) {
  if (t > 60) throw TooLarge("exact dominance check supports t <= 60");
  auto z1 = max_count_pmf_exact(t, 0.0);
  auto z2 = max_count_pmf_exact(t, alpha);
  ExactRational tail1 = 0, tail2 = 0;
  for (int l = t; l >= 0; --l) {
    tail1 += z1[static_cast<std::size_t>(l)];
    tail2 += z2[static_cast<std::size_t>(l)];
    if (tail2 < tail1) return false;
  }
  return true;
}

namespace internal {

inline std::vector<double> max_count_pmf(int t, double alpha) {
  std::vector<double> n_pmf(static_cast<std::size_t>(t) + 1);
  for (int w = 0; w <= t; ++w) {
    double lc = std::lgamma(t + 1.0) - std::lgamma(w + 1.0) - std::lgamma(t - w + 1.0);
    auto term = [&](double p) {
      if (p <= 0.0) return w == 0 ? 1.0 : 0.0;
      if (p >= 1.0) return w == t ? 1.0 : 0.0;
      return std::exp(lc + w * std::log(p) + (t - w) * std::log1p(-p));
    };
    n_pmf[static_cast<std::size_t>(w)] = 0.5 * term(0.5 - alpha) + 0.5 * term(0.5 + alpha);
  }
  std::vector<double> z(static_cast<std::size_t>(t) + 1, 0.0);
  for (int w = 0; w <= t; ++w) z[static_cast<std::size_t>(std::max(w, t - w))] += n_pmf[static_cast<std::size_t>(w)];
  return z;
}

inline std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  return cdf;
}

}  // namespace internal

// Quantile coupling of the max-counts Z1 (alpha = 0) and Z2 (mixture at
// alpha).  Tables are cached per (t, alpha).
class MaxCountCoupler {
 public:
  MaxCountCoupler(int t, double alpha)
      : t_(t), cdf1_(internal::cumulative(internal::max_count_pmf(t, 0.0))),
        cdf2_(internal::cumulative(internal::max_count_pmf(t, alpha))) {}

  // Z2 given Z1 = z1: a uniform point inside z1's quantile interval mapped
  // through the inverse CDF of Z2.
  int couple(int z1, Rng& rng) const {
    const double lower = z1 > 0 ? cdf1_[static_cast<std::size_t>(z1 - 1)] : 0.0;
    const double upper = cdf1_[static_cast<std::size_t>(z1)];
    const double u = lower + rng.uniform_open() * (upper - lower);
    auto it = std::upper_bound(cdf2_.begin(), cdf2_.end(), u);
    int z2 = static_cast<int>(it - cdf2_.begin());
    return std::min(z2, t_);
  }

  int draw_z1(Rng& rng) const {
    auto n1 = static_cast<int>(rng.binomial(static_cast<std::uint64_t>(t_), 0.5));
    return std::max(n1, t_ - n1);
  }

 private:
  int t_;
  std::vector<double> cdf1_, cdf2_;
};

inline std::pair<int, int> monotone_binomial_coupling(int t, double alpha, Rng& rng) {
  if (t < 0) throw InvalidParameter("t must be >= 0");
  MaxCountCoupler c(t, alpha);
  int z1 = c.draw_z1(rng);
  return {z1, c.couple(z1, rng)};
}

// E[max{N, t - N}] under the alpha-mixture.
inline double expected_max_count(int t, double alpha) {
  auto pmf = internal::max_count_pmf(t, alpha);
  double e = 0.0;
  for (int z = 0; z <= t; ++z) e += z * pmf[static_cast<std::size_t>(z)];
  return e;
}

inline double monotone_coupling_bound(int t, double alpha) {
  const double tt = static_cast<double>(t), a2 = alpha * alpha;
  return 64.0 * (a2 * std::pow(tt, 1.5) + a2 * a2 * std::pow(tt, 2.5) + a2 * a2 * alpha * tt * tt * tt);
}

// ---- Paninski mixture coupling ----

enum class PaninskiPath { kMaximal, kMonotone };

inline PaninskiPath paninski_path(std::size_t k, std::size_t n) {
  return n <= k ? PaninskiPath::kMaximal : PaninskiPath::kMonotone;
}

namespace internal {

// log P2(x) for a fixed sequence x with w ones out of r.
inline double log_mixture_sequence(int r, int w, double alpha) {
  auto part = [&](double p) {
    double v = 0.0;
    if (w > 0) v += w * std::log(p);
    if (r - w > 0) v += (r - w) * std::log1p(-p);
    return v;
  };
  double a = part(0.5 + alpha), b = part(0.5 - alpha);
  double m = std::max(a, b);
  return m + std::log(0.5 * (std::exp(a - m) + std::exp(b - m)));
}

// Maximal coupling of P1 and P2 on {0,1}^r conditioned on X = bits.  Both
// laws are exchangeable, so the residual is drawn as a weight class followed
// by a uniform arrangement.
inline void maximal_pair_couple(std::vector<int>& bits, double alpha, Rng& rng) {
  const int r = static_cast<int>(bits.size());
  if (r <= 1 || alpha == 0.0) return;
  const int w = static_cast<int>(std::count(bits.begin(), bits.end(), 1));
  const double log_p1 = -r * std::log(2.0);
  const double keep = std::min(1.0, std::exp(log_mixture_sequence(r, w, alpha) - log_p1));
  if (rng.uniform() < keep) return;
  std::vector<double> residual(static_cast<std::size_t>(r) + 1, 0.0);
  double total = 0.0;
  for (int v = 0; v <= r; ++v) {
    double lc = std::lgamma(r + 1.0) - std::lgamma(v + 1.0) - std::lgamma(r - v + 1.0);
    double excess = std::exp(log_mixture_sequence(r, v, alpha)) - std::exp(log_p1);
    if (excess > 0.0) residual[static_cast<std::size_t>(v)] = std::exp(lc) * excess;
    total += residual[static_cast<std::size_t>(v)];
  }
  if (!(total > 0.0)) return;
  int v = static_cast<int>(normalized(residual).draw(rng)) - 1;
  std::vector<int> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::fill(bits.begin(), bits.end(), 0);
  for (int i = 0; i < v; ++i) {
    auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(r - i));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
    bits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  }
}

// Raise the max-count of bits from z1 to z2 by flipping uniformly chosen
// minority coordinates.
inline void monotone_pair_couple(std::vector<int>& bits, const MaxCountCoupler& coupler, Rng& rng) {
  const int r = static_cast<int>(bits.size());
  const int ones = static_cast<int>(std::count(bits.begin(), bits.end(), 1));
  const int z1 = std::max(ones, r - ones);
  const int z2 = coupler.couple(z1, rng);
  if (z2 == z1) return;
  int majority = ones > r - ones ? 1 : (ones < r - ones ? 0 : (rng.bernoulli(0.5) ? 1 : 0));
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != majority) minority.push_back(i);
  }
  for (int f = 0; f < z2 - z1; ++f) {
    auto j = static_cast<std::size_t>(f) + rng.below(minority.size() - static_cast<std::size_t>(f));
    std::swap(minority[static_cast<std::size_t>(f)], minority[j]);
    bits[minority[static_cast<std::size_t>(f)]] = majority;
  }
}

}  // namespace internal

// Expected Hamming bound of the monotone path assembled pair by pair:
// (k/2) E_R[64(a^2 R^{3/2} + a^4 R^{5/2} + a^5 R^3)], R ~ Bin(n, 2/k).
inline double paninski_monotone_bound(std::size_t k, std::size_t n, double alpha) {
  const double p = 2.0 / static_cast<double>(k);
  const auto nn = static_cast<std::int64_t>(n);
  double e = 0.0;
  for (std::int64_t r = 0; r <= nn; ++r) {
    double lp = std::lgamma(nn + 1.0) - std::lgamma(r + 1.0) - std::lgamma(nn - r + 1.0) + r * std::log(p) +
                (nn - r) * std::log1p(-p);
    if (p >= 1.0) lp = r == nn ? 0.0 : -kInf;
    e += std::exp(lp) * monotone_coupling_bound(static_cast<int>(r), alpha);
  }
  return 0.5 * static_cast<double>(k) * e;
}

inline double paninski_maximal_bound(std::size_t k, std::size_t n, double alpha) {
  const double nn = static_cast<double>(n);
  return 8.0 * alpha * alpha * nn * nn / static_cast<double>(k);
}

// X ~ U[k]^n, Y ~ mixture over z of p_z^n.  Coordinates are grouped by the
// pair {2j-1, 2j} they land in; Y keeps X's pair assignment and recouples the
// within-pair bits pair by pair.
inline Coupling paninski_coupling(std::size_t k, double alpha, std::size_t n) {
  if (k == 0 || k % 2 != 0) throw InvalidParameter("paninski coupling needs even k");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw InvalidParameter("alpha must lie in [0, 1/2)");
  if (n == 0) throw InvalidParameter("n must be >= 1");
  const PaninskiPath path = paninski_path(k, n);
  const double bound = path == PaninskiPath::kMaximal ? paninski_maximal_bound(k, n, alpha)
                                                      : paninski_monotone_bound(k, n, alpha);
  auto couplers = std::make_shared<std::vector<std::shared_ptr<MaxCountCoupler>>>(n + 1);
  auto sampler = [k, alpha, n, path, couplers](Rng& rng) {
    CouplingDraw d{SampleSet(n), SampleSet(n)};
    const std::size_t pairs = k / 2;
    std::vector<std::vector<std::size_t>> members(pairs);
    for (std::size_t i = 0; i < n; ++i) {
      d.x[i] = static_cast<int>(rng.below(k)) + 1;
      members[static_cast<std::size_t>(d.x[i] - 1) / 2].push_back(i);
    }
    d.y = d.x;
    std::vector<int> bits;
    for (std::size_t j = 0; j < pairs; ++j) {
      const auto& pos = members[j];
      if (pos.empty()) continue;
      bits.resize(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) bits[i] = (d.x[pos[i]] % 2 == 1) ? 1 : 0;
      if (path == PaninskiPath::kMaximal) {
        internal::maximal_pair_couple(bits, alpha, rng);
      } else {
        auto& c = (*couplers)[pos.size()];
        if (!c) c = std::make_shared<MaxCountCoupler>(static_cast<int>(pos.size()), alpha);
        internal::monotone_pair_couple(bits, *c, rng);
      }
      for (std::size_t i = 0; i < pos.size(); ++i) d.y[pos[i]] = static_cast<int>(2 * j + (bits[i] == 1 ? 1 : 2));
    }
    return d;
  };
  return Coupling("U[k]^n", "E_z p_z^n", n, bound, sampler);
}

struct HammingEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  bool violation = false;
};

inline HammingEstimate expected_hamming_mc(const Coupling& c, std::int64_t trials, Rng& rng) {
  if (trials <= 0) throw InvalidParameter("trials must be positive");
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t i = 0; i < trials; ++i) {
    CouplingDraw d = c.draw(rng);
    auto h = static_cast<double>(hamming(d.x, d.y));
    sum += h;
    sum2 += h * h;
  }
  const double m = static_cast<double>(trials);
  HammingEstimate e;
  e.mean = sum / m;
  double var = trials > 1 ? std::max(0.0, (sum2 - m * e.mean * e.mean) / (m - 1.0)) : 0.0;
  e.std_error = std::sqrt(var / m);
  e.violation = e.mean - 5.0 * e.std_error > c.d_bound();
  return e;
}

// ---- Constant-weight codes ----

struct Codebook {
  std::size_t k = 0;
  std::size_t weight = 0;
  std::size_t min_distance = 0;
  std::vector<std::uint64_t> codewords;  // bit i set = coordinate i+1 is one

  std::size_t size() const { return codewords.size(); }
};

inline std::size_t codeword_distance(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::size_t>(std::popcount(a ^ b));
}

inline bool codebook_valid(const Codebook& cb) {
  for (std::size_t i = 0; i < cb.codewords.size(); ++i) {
    if (static_cast<std::size_t>(std::popcount(cb.codewords[i])) != cb.weight) return false;
    for (std::size_t j = i + 1; j < cb.codewords.size(); ++j) {
      if (codeword_distance(cb.codewords[i], cb.codewords[j]) < cb.min_distance) return false;
    }
  }
  return true;
}

inline double binomial_coefficient(std::size_t n, std::size_t r) {
  if (r > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0)));
}

// Greedy lexicographic constant-weight code over all C(k, weight) words.
inline Codebook gv_constant_weight_code(std::size_t k, std::size_t weight, std::size_t min_dist,
                                        double max_candidates = 5e6) {
  if (k == 0 || k > 64) throw InvalidParameter("k must lie in [1, 64]");
  if (weight > k) throw InvalidParameter("weight must be <= k");
  if (min_dist > 2 * weight) throw InvalidParameter("min_dist exceeds 2 * weight");
  if (binomial_coefficient(k, weight) > max_candidates) throw TooLarge("too many candidate words");
  Codebook cb{k, weight, min_dist, {}};
  if (weight == 0) {
    cb.codewords.push_back(0);
    return cb;
  }
  // Words of the given weight in increasing numeric order (Gosper's hack).
  std::uint64_t word = (weight == 64) ? ~0ULL : ((1ULL << weight) - 1);
  const std::uint64_t limit = k == 64 ? 0 : (1ULL << k);
  while (true) {
    bool ok = true;
    for (auto c : cb.codewords) {
      if (codeword_distance(c, word) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) cb.codewords.push_back(word);
    if (weight == k) break;
    std::uint64_t low = word & (~word + 1);
    std::uint64_t ripple = word + low;
    if (ripple == 0) break;
    word = (((ripple ^ word) >> 2) / low) | ripple;
    if (limit != 0 && word >= limit) break;
  }
  return cb;
}

// (k / (2^{7/8} l))^{7l/8}.
inline double gv_size_floor(std::size_t k, std::size_t l) {
  const double ll = static_cast<double>(l);
  return std::pow(static_cast<double>(k) / (std::pow(2.0, 7.0 / 8.0) * ll), 7.0 * ll / 8.0);
}

// C(k, w) / sum_{i < ceil(d/2)} C(w, i) C(k-w, i): the size every maximal
// code with minimum distance d meets.
inline double gv_volume_floor(std::size_t k, std::size_t w, std::size_t d) {
  double ball = 0.0;
  const std::size_t top = (d + 1) / 2;
  for (std::size_t i = 0; i < top; ++i) ball += binomial_coefficient(w, i) * binomial_coefficient(k - w, i);
  return binomial_coefficient(k, w) / std::max(ball, 1.0);
}

// ---- Lower-bound calculators ----

inline double lebound_from_coupling(double d, double c = 1.0) {
  if (!(d > 0.0)) throw InvalidParameter("D must be positive");
  return c / d;
}

inline double entropy_lower_bound_samples(std::size_t k, double alpha, double eps, double c = 1.0) {
  return c * std::log(static_cast<double>(k)) / (alpha * eps);
}

inline double coverage_lower_bound_samples(double alpha, double eps, double c = 1.0) {
  return c / (eps * alpha);
}

// Omega(1/(eps alpha)) when k >= 1/alpha, Omega(k/eps) otherwise.
inline double support_size_lower_bound_samples(std::size_t k, double alpha, double eps, double c = 1.0) {
  const double kk = static_cast<double>(k);
  return kk * alpha >= 1.0 ? c / (eps * alpha) : c * kk / eps;
}

}  // namespace dpdi

#endif  // DPDI_COUPLINGS_HPP_
