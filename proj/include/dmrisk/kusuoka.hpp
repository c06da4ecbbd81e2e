#pragma once

// Mixtures of AVaR over a grid of levels and the norm constraint that makes
// their supremum equal to the higher-order measure.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dmrisk/duality.hpp"
#include "dmrisk/errors.hpp"
#include "dmrisk/quantile.hpp"
#include "dmrisk/risk.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

/// A probability measure on a finite grid of levels in (0, 1].
class MixingMeasure {
 public:
  static MixingMeasure make(std::vector<double> grid, std::vector<double> weights) {
    if (grid.empty() || grid.size() != weights.size()) {
      throw precondition_error("MixingMeasure: grid and weights must be nonempty and equally long");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw precondition_error("MixingMeasure: level outside (0, 1]");
      if (i > 0 && !(grid[i] > grid[i - 1])) throw precondition_error("MixingMeasure: grid not increasing");
      if (!(weights[i] >= 0.0)) throw precondition_error("MixingMeasure: negative weight");
    }
    double s = 0.0;
    for (double w : weights) s += w;
    if (std::abs(s - 1.0) > 1e-10) throw precondition_error("MixingMeasure: weights sum to " + std::to_string(s));
    return MixingMeasure(std::move(grid), std::move(weights));
  }

  static MixingMeasure dirac(double level) { return make({level}, {1.0}); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }

  /// sum_i w_i AVaR_{alpha_i}(x).
  double integrate_avar(const RandomVariable& x) const {
    const auto dist = distribution(x);
    double v = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (weights_[i] > 0.0) v += weights_[i] * var_integral(dist, grid_[i]) / grid_[i];
    }
    return v;
  }

 private:
  MixingMeasure(std::vector<double> g, std::vector<double> w) : grid_(std::move(g)), weights_(std::move(w)) {}
  std::vector<double> grid_;
  std::vector<double> weights_;
};

/// alpha_i = alpha_min r^i for i = 0..m-1 with alpha_min = 1/(4N) and
/// alpha_{m-1} = 1.
inline std::vector<double> geometric_grid(std::size_t atoms, std::size_t m) {
  if (atoms == 0 || m < 2) throw precondition_error("geometric_grid: need atoms >= 1 and m >= 2");
  const double amin = 1.0 / (4.0 * static_cast<double>(atoms));
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    g[i] = amin * std::pow(1.0 / amin, static_cast<double>(i) / static_cast<double>(m - 1));
  }
  g.back() = 1.0;
  return g;
}

namespace detail {

/// sigma_j = sum_{i >= j} w_i / alpha_i, the density of the mixture on
/// (alpha_{j-1}, alpha_j].
inline std::vector<double> mixture_density(const std::vector<double>& grid, const std::vector<double>& w) {
  std::vector<double> sigma(grid.size());
  double acc = 0.0;
  for (std::size_t j = grid.size(); j-- > 0;) {
    acc += w[j] / grid[j];
    sigma[j] = acc;
  }
  return sigma;
}

}  // namespace detail

/// int_0^1 sigma(alpha)^q d alpha with sigma(alpha) = sum_{alpha_i >= alpha} w_i / alpha_i,
/// summed exactly over the grid intervals; sigma vanishes above the top level.
inline double kusuoka_constraint(const MixingMeasure& mu, double q) {
  if (!(q > 1.0)) throw precondition_error("kusuoka_constraint: q must be > 1");
  const auto& g = mu.grid();
  const auto sigma = detail::mixture_density(g, mu.weights());
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    acc += (g[j] - prev) * std::pow(sigma[j], q);
    prev = g[j];
  }
  return acc;
}

struct KusuokaResult {
  double value;
  MixingMeasure mu_star;
  std::string method;
};

/// sup of sum_i w_i AVaR_{alpha_i}(x) over mixing weights on `grid` with
/// kusuoka_constraint <= c^q. The grid must end at 1.
///
/// Written in terms of sigma, the objective is sum_j d_j sigma_j v_j with
/// d_j the interval lengths and v_j the mean of VaR over interval j, and the
/// constraints are sum_j d_j sigma_j = 1, sum_j d_j sigma_j^q <= c^q and sigma
/// nonincreasing. Since v is nonincreasing the monotonicity constraint is
/// inactive and water_fill solves the problem exactly.
inline KusuokaResult kusuoka_value_on_grid(const RandomVariable& x, double c, double p,
                                           const std::vector<double>& grid) {
  if (!(c > 1.0) || !(p > 1.0)) throw precondition_error("kusuoka_value: need c > 1 and p > 1");
  if (grid.size() < 2 || grid.back() != 1.0) throw precondition_error("kusuoka_value: grid must end at 1");
  const double q = conjugate_exponent(p);
  const auto dist = distribution(x);
  const std::size_t m = grid.size();
  std::vector<double> d(m);
  std::vector<double> v(m);
  double prev_a = 0.0;
  double prev_i = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double ij = var_integral(dist, grid[j]);
    d[j] = grid[j] - prev_a;
    v[j] = (ij - prev_i) / d[j];
    prev_a = grid[j];
    prev_i = ij;
  }
  // Rounding can break the monotonicity of v by a few ulps; restore it so
  // the recovered weights stay nonnegative.
  for (std::size_t j = 1; j < m; ++j) v[j] = std::min(v[j], v[j - 1]);

  const WaterFill wf = water_fill(d, v, c, q);
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double next = j + 1 < m ? wf.z[j + 1] : 0.0;
    w[j] = std::max(0.0, grid[j] * (wf.z[j] - next));
  }
  double s = 0.0;
  for (double wi : w) s += wi;
  for (double& wi : w) wi /= s;
  MixingMeasure mu = MixingMeasure::make(grid, std::move(w));
  const double value = mu.integrate_avar(x);
  return {value, std::move(mu), wf.method};
}

/// geometric_grid(N, m) merged with the cumulative probabilities of the
/// law of x. VaR is constant between consecutive breakpoints, so on this
/// grid the restricted supremum is the full one.
inline std::vector<double> kusuoka_grid(const RandomVariable& x, std::size_t m) {
  std::vector<double> g = geometric_grid(x.size(), m);
  double cum = 0.0;
  for (const Mass& mass : distribution(x)) {
    cum += mass.prob;
    if (cum < 1.0 - 1e-12) g.push_back(cum);
  }
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  for (double a : g) {
    if (out.empty() || a > out.back() * (1.0 + 1e-12)) out.push_back(a);
  }
  out.back() = 1.0;
  return out;
}

/// kusuoka_value_on_grid over kusuoka_grid(x, grid_size).
inline KusuokaResult kusuoka_value(const RandomVariable& x, double c, double p, std::size_t grid_size) {
  return kusuoka_value_on_grid(x, c, p, kusuoka_grid(x, grid_size));
}

/// The same supremum by projected subgradient in sigma, started at sigma = 1
/// (that is, delta_1), with infeasible iterates pulled back toward it by
/// bisection on the mixing parameter. An independent check of the exact solve.
inline KusuokaResult kusuoka_value_subgradient(const RandomVariable& x, double c, double p,
                                               const std::vector<double>& grid, int iterations = 20000) {
  if (!(c > 1.0) || !(p > 1.0)) throw precondition_error("kusuoka_value: need c > 1 and p > 1");
  if (grid.size() < 2 || grid.back() != 1.0) throw precondition_error("kusuoka_value: grid must end at 1");
  const double q = conjugate_exponent(p);
  const auto dist = distribution(x);
  const std::size_t m = grid.size();
  std::vector<double> d(m);
  std::vector<double> v(m);
  double prev_a = 0.0;
  double prev_i = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double ij = var_integral(dist, grid[j]);
    d[j] = grid[j] - prev_a;
    v[j] = (ij - prev_i) / d[j];
    prev_a = grid[j];
    prev_i = ij;
  }
  WaterFill wf = water_fill_projected(d, v, c, q, iterations);
  // Iterates need not be monotone. The running minimum only lowers sigma, so
  // the recovered weights are nonnegative; rescaling to unit mass can then
  // overshoot the constraint, which a final pull toward delta_1 repairs.
  for (std::size_t j = 1; j < m; ++j) wf.z[j] = std::min(wf.z[j], wf.z[j - 1]);
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double next = j + 1 < m ? wf.z[j + 1] : 0.0;
    w[j] = grid[j] * (wf.z[j] - next);
  }
  double s = 0.0;
  for (double wi : w) s += wi;
  for (double& wi : w) wi /= s;
  const double cq = std::pow(c, q);
  auto mixed = [&](double theta) {
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i) u[i] = theta * w[i];
    u.back() += 1.0 - theta;
    return u;
  };
  double theta = 1.0;
  if (kusuoka_constraint(MixingMeasure::make(grid, w), q) > cq) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (kusuoka_constraint(MixingMeasure::make(grid, mixed(mid)), q) <= cq ? lo : hi) = mid;
    }
    theta = lo;
  }
  MixingMeasure mu = MixingMeasure::make(grid, mixed(theta));
  const double value = mu.integrate_avar(x);
  return {value, std::move(mu), "projected_subgradient"};
}

}  // namespace dmrisk
