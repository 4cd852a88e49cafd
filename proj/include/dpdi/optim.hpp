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

// Private Frank-Wolfe over the l1 ball, logistic regression and Ising models.

#ifndef DPDI_OPTIM_HPP_
#define DPDI_OPTIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dpdi/errors.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/rng.hpp"

namespace dpdi {

using Vector = std::vector<double>;
using Matrix = std::vector<std::vector<double>>;

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot of vectors with different length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm1(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

// Rows with identical (x, y) are stored once with a weight; the loss is the
// weighted mean.
struct LabeledDataset {
  std::vector<Vector> features;
  std::vector<int> labels;
  std::vector<double> weights;

  std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }
  std::size_t rows() const { return features.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  void add(Vector x, int y, double weight = 1.0) {
    if (y != 1 && y != -1) throw InvalidParameter("labels must be +1 or -1");
    if (!features.empty() && x.size() != dim()) throw DimensionMismatch("feature length differs");
    for (double v : x) {
      if (!(std::fabs(v) <= 1.0)) throw InvalidParameter("features must satisfy |x|_inf <= 1");
    }
    features.push_back(std::move(x));
    labels.push_back(y);
    weights.push_back(weight);
  }

  // Merges duplicate rows.
  LabeledDataset aggregated() const {
    std::map<std::pair<Vector, int>, double> merged;
    for (std::size_t r = 0; r < rows(); ++r) merged[{features[r], labels[r]}] += weights[r];
    LabeledDataset out;
    for (auto& [key, w] : merged) {
      out.features.push_back(key.first);
      out.labels.push_back(key.second);
      out.weights.push_back(w);
    }
    return out;
  }
};

inline double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double logistic_loss(const Vector& w, const LabeledDataset& d) {
  if (d.rows() == 0) throw EmptyDataset("logistic loss of an empty dataset");
  double s = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) s += d.weights[r] * log1p_exp(-d.labels[r] * dot(w, d.features[r]));
  return s / d.total_weight();
}

inline Vector logistic_gradient(const Vector& w, const LabeledDataset& d) {
  if (d.rows() == 0) throw EmptyDataset("logistic gradient of an empty dataset");
  Vector g(w.size(), 0.0);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double y = d.labels[r];
    const double c = -y * sigmoid(-y * dot(w, d.features[r])) * d.weights[r];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += c * d.features[r][j];
  }
  const double tw = d.total_weight();
  for (double& v : g) v /= tw;
  return g;
}

// Lipschitz constant of the logistic loss w.r.t. the l1 norm when |x|_inf <= 1.
inline constexpr double kLogisticLipschitz = 2.0;

struct L1Constraint {
  double radius = 1.0;
  void validate() const {
    if (!(radius > 0.0)) throw InvalidParameter("l1 radius must be positive");
  }
};

// T = lambda^{2/3} (n sqrt(rho))^{2/3} for zCDP and lambda^{2/3} (n eps)^{2/3}
// otherwise.
inline int default_fw_iterations(double radius, double n, const PrivacyBudget& budget) {
  const double scale = budget.is_zcdp() ? n * std::sqrt(*budget.rho) : n * budget.epsilon;
  if (std::isinf(scale)) throw InvalidParameter("no default iteration count without noise");
  return std::max(1, static_cast<int>(std::ceil(std::pow(radius * scale, 2.0 / 3.0))));
}

// Per-vertex Laplace scale for one Frank-Wolfe round.
inline double fw_noise_scale(double radius, double n, int T, const PrivacyBudget& budget) {
  budget.validate();
  const double num = kLogisticLipschitz * radius;
  if (budget.is_zcdp()) return std::isinf(*budget.rho) ? 0.0 : num * std::sqrt(static_cast<double>(T)) / (n * std::sqrt(*budget.rho));
  if (std::isinf(budget.epsilon)) return 0.0;
  if (!(budget.delta > 0.0)) throw InvalidBudget("Frank-Wolfe needs delta > 0 or a zCDP budget");
  return num * std::sqrt(8.0 * T * std::log(1.0 / budget.delta)) / (n * budget.epsilon);
}

struct FwResult {
  Vector w;
  std::vector<double> risk;  // loss after each step
  double max_l1 = 0.0;       // largest iterate norm seen
  double noise_scale = 0.0;
};

inline FwResult private_frank_wolfe(const LabeledDataset& d, const L1Constraint& c, const PrivacyBudget& budget,
                                    int T, Rng& rng, bool track_risk = false) {
  if (d.rows() == 0) throw EmptyDataset("Frank-Wolfe on an empty dataset");
  if (T < 1) throw InvalidParameter("T must be >= 1");
  c.validate();
  const std::size_t p = d.dim();
  FwResult out;
  out.w.assign(p, 0.0);
  out.noise_scale = fw_noise_scale(c.radius, d.total_weight(), T, budget);
  for (int t = 0; t < T; ++t) {
    Vector g = logistic_gradient(out.w, d);
    // Vertex 2j is +radius e_j, 2j+1 is -radius e_j.
    std::size_t best = 0;
    double best_score = kInf;
    for (std::size_t v = 0; v < 2 * p; ++v) {
      double score = (v % 2 == 0 ? c.radius : -c.radius) * g[v / 2];
      if (out.noise_scale > 0.0) score += rng.laplace(out.noise_scale);
      if (score < best_score) {
        best_score = score;
        best = v;
      }
    }
    const double mu = 2.0 / (t + 2.0);
    for (double& x : out.w) x *= 1.0 - mu;
    out.w[best / 2] += mu * (best % 2 == 0 ? c.radius : -c.radius);
    out.max_l1 = std::max(out.max_l1, norm1(out.w));
    if (track_risk) out.risk.push_back(logistic_loss(out.w, d));
  }
  return out;
}

// Excess risk bound lambda^{4/3} ln(n d) / (n sqrt(rho))^{2/3}, up to a
// multiplier.
inline double fw_risk_bound(double radius, double n, std::size_t dim, double rho, double multiplier = 1.0) {
  return multiplier * std::pow(radius, 4.0 / 3.0) * std::log(n * static_cast<double>(dim)) /
         std::pow(n * std::sqrt(rho), 2.0 / 3.0);
}

// ---- Ising models ----

struct IsingModel {
  Matrix A;
  Vector theta;

  std::size_t p() const { return theta.size(); }

  void validate() const {
    const std::size_t n = theta.size();
    if (A.size() != n) throw DimensionMismatch("A and theta differ in size");
    for (std::size_t i = 0; i < n; ++i) {
      if (A[i].size() != n) throw DimensionMismatch("A is not square");
      if (A[i][i] != 0.0) throw InvalidParameter("A must have a zero diagonal");
      for (std::size_t j = 0; j < i; ++j) {
        if (A[i][j] != A[j][i]) throw InvalidParameter("A must be symmetric");
      }
    }
  }

  double width() const {
    double w = 0.0;
    for (std::size_t i = 0; i < p(); ++i) {
      double row = std::fabs(theta[i]);
      for (double a : A[i]) row += std::fabs(a);
      w = std::max(w, row);
    }
    return w;
  }

  static IsingModel zeros(std::size_t p) { return {Matrix(p, Vector(p, 0.0)), Vector(p, 0.0)}; }
};

using Spins = std::vector<int>;

// P(z_i = +1 | z_{-i}) = sigmoid(2 sum_j A_ij z_j + 2 theta_i).
inline double ising_conditional(const IsingModel& m, const Spins& z, std::size_t i) {
  double f = m.theta[i];
  for (std::size_t j = 0; j < m.p(); ++j) {
    if (j != i) f += m.A[i][j] * z[j];
  }
  return sigmoid(2.0 * f);
}

class GibbsChain {
 public:
  GibbsChain(const IsingModel& m, Rng& rng) : m_(m), rng_(rng), z_(m.p()) {
    m.validate();
    for (auto& s : z_) s = rng_.bernoulli(0.5) ? 1 : -1;
  }
  void sweep() {
    for (std::size_t i = 0; i < z_.size(); ++i) z_[i] = rng_.bernoulli(ising_conditional(m_, z_, i)) ? 1 : -1;
  }
  const Spins& state() const { return z_; }

 private:
  const IsingModel& m_;
  Rng& rng_;
  Spins z_;
};

// Defaults: burn-in 100 p sweeps, p sweeps between retained samples.
inline std::vector<Spins> ising_gibbs(const IsingModel& m, std::size_t n, std::optional<std::size_t> burnin,
                                      std::optional<std::size_t> thin, Rng& rng) {
  GibbsChain chain(m, rng);
  const std::size_t b = burnin.value_or(100 * m.p()), th = std::max<std::size_t>(1, thin.value_or(m.p()));
  for (std::size_t s = 0; s < b; ++s) chain.sweep();
  std::vector<Spins> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < th; ++r) chain.sweep();
    out.push_back(chain.state());
  }
  return out;
}

// Bit i of the index set means z_i = +1.
inline std::size_t spin_index(const Spins& z) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 1) idx |= std::size_t{1} << i;
  }
  return idx;
}

inline Spins spins_from_index(std::size_t idx, std::size_t p) {
  Spins z(p);
  for (std::size_t i = 0; i < p; ++i) z[i] = ((idx >> i) & 1U) ? 1 : -1;
  return z;
}

// Exact law P(z) proportional to exp(sum_{i<j} A_ij z_i z_j + sum_i theta_i z_i).
inline std::vector<double> ising_exact_law(const IsingModel& m) {
  m.validate();
  const std::size_t p = m.p();
  if (p > 20) throw TooLarge("exact Ising law needs p <= 20");
  std::vector<double> logw(std::size_t{1} << p);
  for (std::size_t idx = 0; idx < logw.size(); ++idx) {
    Spins z = spins_from_index(idx, p);
    double e = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      e += m.theta[i] * z[i];
      for (std::size_t j = i + 1; j < p; ++j) e += m.A[i][j] * z[i] * z[j];
    }
    logw[idx] = e;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& v : logw) total += (v = std::exp(v - mx));
  for (double& v : logw) v /= total;
  return logw;
}

// Regression of z_i on [z_{-i}, 1].
inline LabeledDataset ising_node_dataset(const std::vector<Spins>& samples, std::size_t i) {
  LabeledDataset d;
  for (const auto& z : samples) {
    Vector x;
    x.reserve(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != i) x.push_back(z[j]);
    }
    x.push_back(1.0);
    d.add(std::move(x), z[i]);
  }
  return d.aggregated();
}

// Budget of each of the p node regressions.  Composition is additive in rho,
// epsilon and delta.
inline PrivacyBudget ising_node_budget(const PrivacyBudget& total, std::size_t p) {
  const double q = static_cast<double>(p);
  if (total.is_zcdp()) return PrivacyBudget::zcdp(*total.rho / q);
  if (std::isinf(total.epsilon)) return total;
  return PrivacyBudget::approx(total.epsilon / q, total.delta / q);
}

struct IsingEstimate {
  Matrix A;
  Vector theta;
  std::vector<PrivacyBudget> node_budgets;
};

// Each row i comes from its own regression: A_ij = w_j / 2.  Rows are not
// symmetrized unless asked.
inline IsingEstimate learn_ising_private(const std::vector<Spins>& samples, double lambda,
                                         const PrivacyBudget& budget, Rng& rng, std::optional<int> T = {},
                                         bool symmetrize = false) {
  if (samples.empty()) throw EmptyDataset("no Ising samples");
  if (!(lambda > 0.0)) throw InvalidParameter("width bound must be positive");
  const std::size_t p = samples[0].size();
  IsingEstimate est{Matrix(p, Vector(p, 0.0)), Vector(p, 0.0), {}};
  const PrivacyBudget node = ising_node_budget(budget, p);
  const L1Constraint c{2.0 * lambda};
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < p; ++i) {
    LabeledDataset d = ising_node_dataset(samples, i);
    Rng node_rng = rng.split(i);
    const int iters = T ? *T : default_fw_iterations(c.radius, n, node);
    FwResult fw = private_frank_wolfe(d, c, node, iters, node_rng);
    std::size_t col = 0;
    for (std::size_t j = 0; j < p; ++j) {
      if (j != i) est.A[i][j] = 0.5 * fw.w[col++];
    }
    est.theta[i] = 0.5 * fw.w[col];
    est.node_budgets.push_back(node);
  }
  if (symmetrize) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) est.A[i][j] = est.A[j][i] = 0.5 * (est.A[i][j] + est.A[j][i]);
    }
  }
  return est;
}

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) throw DimensionMismatch("matrices differ in size");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw DimensionMismatch("matrices differ in size");
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::fabs(a[i][j] - b[i][j]));
  }
  return m;
}

}  // namespace dpdi

#endif  // DPDI_OPTIM_HPP_
