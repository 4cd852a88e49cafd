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

// Small statistics helpers shared by the unit tests.

#ifndef DPDI_TESTS_STAT_HELPERS_HPP_
#define DPDI_TESTS_STAT_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace dpdi::testutil {

// Pearson goodness-of-fit p-value; cells with zero expected mass are skipped
// and must be empty.
inline double chi2_pvalue(const std::vector<std::int64_t>& counts, const std::vector<double>& probs) {
  double n = 0.0, stat = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) {
      if (counts[i] != 0) return 0.0;
      continue;
    }
    const double e = n * probs[i];
    stat += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
    ++cells;
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

struct Moments {
  double sum = 0.0, sq = 0.0;
  std::int64_t count = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
  double se() const {
    const double m = mean();
    return std::sqrt(std::max(0.0, sq / static_cast<double>(count) - m * m) / static_cast<double>(count));
  }
};

}  // namespace dpdi::testutil

#endif  // DPDI_TESTS_STAT_HELPERS_HPP_
