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

#ifndef DPDI_RNG_HPP_
#define DPDI_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace dpdi {

// SplitMix64 finalizer. Used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for a path of stream indices below `base`.  Derivation is a
// pure function of its arguments, so the same (seed, path) always yields the
// same stream regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Seeded randomness stream.  Satisfies UniformRandomBitGenerator so it can
// drive <random> distributions directly.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }

  // Independent stream identified by `index`; does not advance *this.
  Rng split(std::uint64_t index) const { return Rng(derive_seed(seed_, {index})); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  // Uniform integer in [0, n).  Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    __uint128_t m = static_cast<__uint128_t>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Laplace(0, scale) by inverse CDF.  scale == 0 returns exactly 0.
  double laplace(double scale) {
    if (scale == 0.0) return 0.0;
    double u = uniform_open() - 0.5;
    return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::fabs(u));
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(*this);
  }

  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::uint64_t> d(n, p);
    return d(*this);
  }

  double gamma(double shape) {
    std::gamma_distribution<double> d(shape, 1.0);
    return d(*this);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dpdi

#endif  // DPDI_RNG_HPP_
