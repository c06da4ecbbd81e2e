#pragma once

// Independent reference computations for the tests. They share no code with
// the library beyond the RandomVariable container.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "dmrisk/space.hpp"

namespace oracle {

using dmrisk::RandomVariable;
using dmrisk::SpacePtr;

/// Dense grid search on [lo, hi] with `n` points, then a second grid on the
/// best cell's neighbours; `extra` points (kinks) are always evaluated.
inline std::pair<double, double> grid_min(const std::function<double(double)>& f, double lo, double hi,
                                          int n = 20001, const std::vector<double>& extra = {}) {
  double best_s = lo;
  double best = std::numeric_limits<double>::infinity();
  auto probe = [&](double s) {
    const double v = f(s);
    if (v < best) {
      best = v;
      best_s = s;
    }
  };
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) probe(lo + i * h);
  const double c = best_s;
  for (int i = 0; i <= 2000; ++i) probe(c - h + i * (2 * h / 2000));
  for (double e : extra) probe(e);
  return {best, best_s};
}

/// E[(s - x)^+] under the atom probabilities.
inline double expected_shortfall_at(const RandomVariable& x, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.space()->prob(i) * std::max(0.0, s - x[i]);
  return acc;
}

/// ||(s - x)^+||_p.
inline double shortfall_norm(const RandomVariable& x, double s, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.space()->prob(i) * std::pow(std::max(0.0, s - x[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// inf_s { c ||(s - x)^+||_p - s } by grid search; the kinks x_i are probed.
inline double higher_order_grid(const RandomVariable& x, double c, double p) {
  const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
  std::vector<double> kinks(x.values().begin(), x.values().end());
  return grid_min([&](double s) { return c * shortfall_norm(x, s, p) - s; }, *lo - 1.0, *hi + 1.0, 20001, kinks)
      .first;
}

/// VaR_t by the definition inf{m : P(x + m < 0) <= t}: the infimum is one of
/// the points -x_i, so test each candidate.
inline double var_by_definition(const RandomVariable& x, double t) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double m = -x[k];
    double p = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] + m < 0.0) p += x.space()->prob(i);
    }
    if (p <= t + 1e-15) best = std::min(best, m);
  }
  return best;
}

/// AVaR on a uniform space with alpha = k/N: minus the mean of the k
/// smallest values.
inline double avar_uniform(const RandomVariable& x, std::size_t k) {
  std::vector<double> v(x.values().begin(), x.values().end());
  std::sort(v.begin(), v.end());
  return -std::accumulate(v.begin(), v.begin() + static_cast<long>(k), 0.0) / static_cast<double>(k);
}

/// ||x||_p directly.
inline double lp_norm(const RandomVariable& x, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.space()->prob(i) * std::pow(std::abs(x[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// Luxemburg norm by its own bisection on lambda.
inline double luxemburg(const RandomVariable& x, const std::function<double(double)>& g) {
  double m = 0.0;
  for (double v : x.values()) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  auto modular = [&](double lam) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.space()->prob(i) * g(std::abs(x[i]) / lam);
    return acc;
  };
  double lo = 1e-12 * m;
  double hi = m;
  while (modular(hi) > 1.0) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (modular(mid) > 1.0 ? lo : hi) = mid;
  }
  return hi;
}

/// sup { E[x y] : E[G(|y|)] <= 1 } (the unit Luxemburg ball) from the
/// first-order conditions: |y_i| = (G')^{-1}(mu |x_i|) with sign(y_i) =
/// sign(x_i), and mu > 0 fixed by bisection so the modular equals one.
/// `dinv` is the inverse of G'.
inline double orlicz_norm_direct(const RandomVariable& x, const std::function<double(double)>& g,
                                 const std::function<double(double)>& dinv) {
  double m = 0.0;
  for (double v : x.values()) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  auto modular = [&](double mu) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.space()->prob(i) * g(dinv(mu * std::abs(x[i])));
    return acc;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (modular(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (modular(mid) < 1.0 ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) e += x.space()->prob(i) * std::abs(x[i]) * dinv(mu * std::abs(x[i]));
  return e;
}

/// Standard normal quantile by bisection on 0.5 erfc(-z / sqrt 2).
inline double normal_quantile(double u) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Midpoint discretization of the standard normal on n equal atoms.
inline std::vector<double> discretized_normal(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return v;
}

// ---------------------------------------------------------------------------
// Generators.

inline SpacePtr random_space(std::mt19937_64& rng, std::size_t n, bool uniform) {
  if (uniform) return dmrisk::ProbSpace::uniform(n);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& v : p) s += (v = u(rng));
  for (double& v : p) v /= s;
  return dmrisk::ProbSpace::make(std::move(p));
}

inline RandomVariable random_variable(std::mt19937_64& rng, const SpacePtr& space, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(space->size());
  for (double& e : v) e = g(rng);
  return RandomVariable(space, std::move(v));
}

inline std::size_t random_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random density z on the space: positive with E[z] = 1, some zeros.
inline RandomVariable random_density(std::mt19937_64& rng, const SpacePtr& space, double spread) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(0.3);
  std::vector<double> z(space->size());
  double m = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = zero(rng) && i > 0 ? 0.0 : std::pow(e(rng), spread);
    m += space->prob(i) * z[i];
  }
  for (double& v : z) v /= m;
  return RandomVariable(space, std::move(z));
}

}  // namespace oracle
