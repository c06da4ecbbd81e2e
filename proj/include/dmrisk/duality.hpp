#pragma once

// Conjugates rho^#(y) = sup_x { E[x y] - rho(x) }, Fenchel-Young gaps, the
// norm-bounded density problem dual to the higher-order measure, and the
// eta-form of the conjugate of a transformed norm measure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dmrisk/errors.hpp"
#include "dmrisk/ext_real.hpp"
#include "dmrisk/orlicz.hpp"
#include "dmrisk/partition.hpp"
#include "dmrisk/risk.hpp"
#include "dmrisk/scalar_opt.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

inline constexpr double kDensityTolerance = 1e-10;
inline constexpr double kDivergenceThreshold = 1e6;

/// A probability density with respect to the reference measure.
class Density {
 public:
  static Density make(const RandomVariable& z) {
    for (double v : z.values()) {
      if (v < 0.0) throw precondition_error("Density: negative value " + std::to_string(v));
    }
    const double m = expectation(z);
    if (std::abs(m - 1.0) > kDensityTolerance) {
      throw precondition_error("Density: E[z] = " + std::to_string(m) + " differs from 1");
    }
    return Density(z);
  }

  static bool is_density(const RandomVariable& z, double tol = kDensityTolerance) {
    return std::all_of(z.values().begin(), z.values().end(), [](double v) { return v >= 0.0; }) &&
           std::abs(expectation(z) - 1.0) <= tol;
  }

  const RandomVariable& values() const { return z_; }
  const SpacePtr& space() const { return z_.space(); }
  double operator[](std::size_t i) const { return z_[i]; }
  std::size_t size() const { return z_.size(); }

 private:
  explicit Density(RandomVariable z) : z_(std::move(z)) {}
  RandomVariable z_;
};

/// ||z||_q under the reference measure; q = inf gives the max norm.
inline double lq_norm(const RandomVariable& z, double q) {
  if (std::isinf(q)) return max_abs(z);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += z.space()->prob(i) * std::pow(std::abs(z[i]), q);
  return std::pow(acc, 1.0 / q);
}

/// Conjugate exponent of p >= 1 (inf for p = 1).
inline double conjugate_exponent(double p) {
  if (!(p >= 1.0)) throw precondition_error("conjugate_exponent: p must be >= 1");
  return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
}

/// z is feasible for the higher-order dual: a density with ||z||_q <= c + 1e-9.
inline bool is_dual_feasible(const RandomVariable& z, double c, double q) {
  return Density::is_density(z) && lq_norm(z, q) <= c + 1e-9;
}

// ---------------------------------------------------------------------------
// Norm-bounded linear maximization.

struct WaterFill {
  std::vector<double> z;
  double value;
  std::string method;  // "argmax", "kkt" or "greedy"
  int iterations;
};

/// Maximizes sum_i w_i a_i z_i over z >= 0 with sum_i w_i z_i = 1 and
/// sum_i w_i z_i^q <= c^q (z <= c when q = inf). The weights w must be
/// positive with unit sum.
///
/// If the uniform density on the argmax set of a is feasible it is optimal.
/// Otherwise the norm constraint binds and the KKT conditions give
/// z proportional to ((a - lambda)^+)^(1/(q-1)); lambda is found by
/// bisection on the norm ratio, which is monotone in lambda.
inline WaterFill water_fill(std::span<const double> w, std::span<const double> a, double c, double q) {
  const std::size_t n = w.size();
  if (n == 0 || a.size() != n) throw precondition_error("water_fill: size mismatch");
  if (!(c >= 1.0)) throw precondition_error("water_fill: c must be >= 1");
  if (!(q > 1.0)) throw precondition_error("water_fill: q must be > 1");

  auto value_of = [&](const std::vector<double>& z) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += w[i] * a[i] * z[i];
    return v;
  };

  std::vector<double> z(n, 0.0);
  if (std::isinf(q)) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a[i] > a[j]; });
    double left = 1.0;
    for (std::size_t i : idx) {
      if (left <= 0.0) break;
      const double take = std::min(w[i] * c, left);
      z[i] = take / w[i];
      left -= take;
    }
    return {z, value_of(z), "greedy", 0};
  }

  const double amax = *std::max_element(a.begin(), a.end());
  const double amin = *std::min_element(a.begin(), a.end());
  const double tie = 1e-14 * std::max(1.0, std::abs(amax));
  double pm = 0.0;
  double below = -std::numeric_limits<double>::infinity();  // largest value off the argmax set
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] >= amax - tie) {
      pm += w[i];
    } else {
      below = std::max(below, a[i]);
    }
  }
  const double cq = std::pow(c, q);
  if (std::pow(pm, 1.0 - q) <= cq * (1.0 + 1e-12) || !std::isfinite(below)) {
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] >= amax - tie ? 1.0 / pm : 0.0;
    return {z, value_of(z), "argmax", 0};
  }

  // Parametrize lambda = amax - t with t > 0.
  const double e = 1.0 / (q - 1.0);
  auto weights_at = [&](double t, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(std::max(0.0, a[i] - amax + t), e);
  };
  std::vector<double> buf(n);
  auto ratio = [&](double t) {
    weights_at(t, buf);
    double m1 = 0.0;
    double mq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m1 += w[i] * buf[i];
      mq += w[i] * std::pow(buf[i], q);
    }
    return mq / std::pow(m1, q);
  };
  auto feasible = [&](double t) { return ratio(t) <= cq; };

  double lo = 0.5 * (amax - below);  // only the argmax set is active here
  double hi = std::max(amax - amin, lo);
  int doublings = 0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (++doublings > 200) throw bracket_error("water_fill: norm ratio never reaches c^q");
  }
  if (feasible(lo)) throw bracket_error("water_fill: argmax set unexpectedly feasible");
  const auto br = bisect_switch(feasible, lo, hi, 1e-15, 400);
  weights_at(br.hi, z);
  const double m1 = std::inner_product(w.begin(), w.end(), z.begin(), 0.0);
  for (double& v : z) v /= m1;
  return {z, value_of(z), "kkt", br.iterations};
}

namespace detail {

/// Projection in the w-weighted Euclidean norm onto {z >= 0, sum w z = 1}:
/// z = (y - tau)^+ with tau found by sorting y in decreasing order.
inline std::vector<double> project_weighted_simplex(std::span<const double> w, std::vector<double> y) {
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return y[i] > y[j]; });
  double sw = 0.0;
  double swy = 0.0;
  double tau = 0.0;
  for (std::size_t i : idx) {
    const double t = (swy + w[i] * y[i] - 1.0) / (sw + w[i]);
    if (y[i] <= t) break;
    sw += w[i];
    swy += w[i] * y[i];
    tau = t;
  }
  for (double& v : y) v = std::max(0.0, v - tau);
  return y;
}

}  // namespace detail

/// Projected gradient ascent for the same problem as water_fill. On the
/// q-sphere the gradient is first projected onto its tangent space. After
/// each simplex projection, infeasible iterates are pulled toward the uniform
/// density (norm 1 < c) by bisection on the mixing weight. Used as fallback
/// and as an independent check.
inline WaterFill water_fill_projected(std::span<const double> w, std::span<const double> a, double c,
                                      double q, int iterations = 20000) {
  const std::size_t n = w.size();
  auto norm_q = [&](const std::vector<double>& z) {
    if (std::isinf(q)) return *std::max_element(z.begin(), z.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::pow(z[i], q);
    return std::pow(acc, 1.0 / q);
  };
  auto value_of = [&](const std::vector<double>& z) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += w[i] * a[i] * z[i];
    return v;
  };
  const double scale = std::max(1.0, *std::max_element(a.begin(), a.end()) -
                                         *std::min_element(a.begin(), a.end()));
  std::vector<double> z(n, 1.0);
  std::vector<double> best = z;
  double best_v = value_of(z);
  for (int k = 1; k <= iterations; ++k) {
    std::vector<double> g(a.begin(), a.end());
    if (!std::isinf(q) && norm_q(z) > c * (1.0 - 1e-9)) {
      // on the sphere: drop the outward component along the normal z^(q-1)
      double nn = 0.0;
      double gn = 0.0;
      std::vector<double> nrm(n);
      for (std::size_t i = 0; i < n; ++i) {
        nrm[i] = std::pow(z[i], q - 1.0);
        nn += w[i] * nrm[i] * nrm[i];
        gn += w[i] * g[i] * nrm[i];
      }
      if (gn > 0.0 && nn > 0.0) {
        for (std::size_t i = 0; i < n; ++i) g[i] -= gn / nn * nrm[i];
      }
    }
    std::vector<double> y(n);
    const double step = 1.0 / (scale * std::sqrt(static_cast<double>(k)));
    for (std::size_t i = 0; i < n; ++i) y[i] = z[i] + step * g[i];
    std::vector<double> cand = detail::project_weighted_simplex(w, std::move(y));
    if (norm_q(cand) > c) {
      double lo = 0.0;  // weight on cand that stays feasible
      double hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> mix(n);
        for (std::size_t i = 0; i < n; ++i) mix[i] = mid * cand[i] + (1.0 - mid);
        (norm_q(mix) <= c ? lo : hi) = mid;
      }
      for (double& v : cand) v = lo * v + (1.0 - lo);
    }
    z = std::move(cand);
    const double v = value_of(z);
    if (v > best_v) {
      best_v = v;
      best = z;
    }
  }
  return {best, best_v, "projected_gradient", iterations};
}

struct DualSolution {
  double value;
  Density z_star;
  std::string method;
};

/// max E[-x Z] over densities Z with ||Z||_q <= c; equals higher_order_T(x, c, p)
/// for q the conjugate exponent of p.
inline DualSolution dual_higher_order(const RandomVariable& x, double c, double q) {
  if (!(c > 1.0)) throw precondition_error("dual_higher_order: c must be > 1");
  if (!(q > 1.0)) throw precondition_error("dual_higher_order: q must be > 1");
  const auto w = x.space()->probs();
  std::vector<double> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = -x[i];
  WaterFill r;
  try {
    r = water_fill(w, a, c, q);
  } catch (const bracket_error&) {
    r = water_fill_projected(w, a, c, q);
  }
  return {r.value, Density::make(RandomVariable(x.space(), std::move(r.z))), r.method};
}

// ---------------------------------------------------------------------------
// Conjugates.

enum class ConjugateStatus { closed_form, divergent, lower_bound_only };

inline const char* to_string(ConjugateStatus s) {
  switch (s) {
    case ConjugateStatus::closed_form: return "closed_form";
    case ConjugateStatus::divergent: return "divergent";
    case ConjugateStatus::lower_bound_only: return "lower_bound_only";
  }
  return "?";
}

struct ConjugateValue {
  ExtReal value;  // exact for closed_form/divergent, a lower bound otherwise
  ConjugateStatus status;
  bool resolved() const { return status != ConjugateStatus::lower_bound_only; }
};

/// F*(||z/b||*_G) for H = b x^+, the minimum of the eta-form; +inf when the
/// norm leaves the domain of F* by more than 1e-9.
inline ExtReal transformed_conjugate_positive_part(const OrliczTriple& t, const RandomVariable& z,
                                                   double b) {
  const double nrm = orlicz_norm((1.0 / b) * z, t.G);
  const OrliczFunction fstar = t.F.conjugate();
  const double dom = fstar.domain_end();
  const double arg = (nrm > dom && nrm <= dom + 1e-9) ? dom : nrm;
  return fstar(arg);
}

/// Closed-form conjugate for the built-in families, if one is known.
inline std::optional<ExtReal> conjugate_closed_form(const RiskFunctional& rho, const RandomVariable& y) {
  const RandomVariable z = -y;
  if (!rho.is_builtin()) return std::nullopt;
  // Cash-additive and monotone: finite only on negatives of densities.
  if (!Density::is_density(z)) return ExtReal::infinity();
  return std::visit(
      detail::overloaded{
          [&](const RiskFunctional::Avar& k) -> std::optional<ExtReal> {
            return max_abs(z) <= 1.0 / k.alpha + kDensityTolerance ? ExtReal(0.0) : ExtReal::infinity();
          },
          [&](const RiskFunctional::HigherOrder& k) -> std::optional<ExtReal> {
            return lq_norm(z, conjugate_exponent(k.p)) <= k.c + 1e-9 ? ExtReal(0.0) : ExtReal::infinity();
          },
          [&](const RiskFunctional::Transformed& k) -> std::optional<ExtReal> {
            if (auto b = k.triple.H.indicator_bound()) return transformed_conjugate_positive_part(k.triple, z, *b);
            return std::nullopt;
          },
          [](const RiskFunctional::Custom&) -> std::optional<ExtReal> { return std::nullopt; },
      },
      rho.kind());
}

/// Numeric maximization of E[x y] - rho(x) over x in R^N.
///
/// First probes the rays m d for d in {+-1, +-1{y<0}, +-1{y>0}} and m = 10^k;
/// an objective above 1e6 flags divergence. Otherwise runs a compass search
/// from 0 and from `restarts` seeded random starts and reports the best
/// value as a lower bound.
inline ConjugateValue conjugate_ascent(const RiskFunctional& rho, const RandomVariable& y, int restarts,
                                       std::uint64_t seed) {
  const SpacePtr& space = y.space();
  const std::size_t n = y.size();
  auto objective = [&](const RandomVariable& x) {
    const ExtReal r = rho(x);
    return r.is_infinite() ? -std::numeric_limits<double>::infinity() : inner(x, y) - r.value();
  };

  std::vector<RandomVariable> dirs;
  auto indicator = [&](auto pred) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = pred(y[i]) ? 1.0 : 0.0;
    return RandomVariable(space, std::move(v));
  };
  const RandomVariable one = RandomVariable::constant(space, 1.0);
  const RandomVariable neg = indicator([](double v) { return v < 0.0; });
  const RandomVariable pos = indicator([](double v) { return v > 0.0; });
  for (const auto* d : {&one, &neg, &pos}) {
    dirs.push_back(*d);
    dirs.push_back(-*d);
  }
  for (const auto& d : dirs) {
    for (int k = 0; k <= 9; ++k) {
      if (objective(std::pow(10.0, k) * d) > kDivergenceThreshold) {
        return {ExtReal::infinity(), ConjugateStatus::divergent};
      }
    }
  }

  const double scale = std::max(1.0, max_abs(y));
  auto compass = [&](std::vector<double> x) {
    double fx = objective(RandomVariable(space, x));
    for (double h = scale; h > 1e-9; h *= 0.5) {
      bool improved = true;
      for (int sweep = 0; improved && sweep < 200; ++sweep) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
          for (double s : {h, -h}) {
            x[i] += s;
            const double f = objective(RandomVariable(space, x));
            if (f > fx + 1e-15) {
              fx = f;
              improved = true;
            } else {
              x[i] -= s;
            }
          }
        }
      }
    }
    return fx;
  };

  double best = compass(std::vector<double>(n, 0.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> x0(n);
    for (double& v : x0) v = gauss(rng);
    best = std::max(best, compass(std::move(x0)));
  }
  if (best > kDivergenceThreshold) return {ExtReal::infinity(), ConjugateStatus::divergent};
  return {ExtReal(best), ConjugateStatus::lower_bound_only};
}

/// rho^#(y): the closed form when available, else the numeric search.
inline ConjugateValue conjugate_sharp(const RiskFunctional& rho, const RandomVariable& y, int restarts = 4,
                                      std::uint64_t seed = 0) {
  if (auto v = conjugate_closed_form(rho, y)) return {*v, ConjugateStatus::closed_form};
  return conjugate_ascent(rho, y, restarts, seed);
}

/// rho(x) + rho^#(y) - E[x y], nonnegative by Fenchel-Young.
inline ExtReal fenchel_gap(const RiskFunctional& rho, const RandomVariable& x, const RandomVariable& y) {
  require_same_space(x.space(), y.space(), "fenchel_gap");
  const ConjugateValue c = conjugate_sharp(rho, y);
  if (!c.resolved()) {
    throw unresolved_error("fenchel_gap: conjugate of " + rho.name() + " only bounded below (" +
                           c.value.to_string() + ")");
  }
  return rho(x) + c.value - inner(x, y);
}

struct ConjugateDilatation {
  ExtReal lhs;  // rho^#(E[y | p])
  ExtReal rhs;  // rho^#(y)
  bool holds;
};

inline ConjugateDilatation conjugate_dilatation_check(const RiskFunctional& rho, const RandomVariable& y,
                                                      const Partition& p) {
  const ConjugateValue l = conjugate_sharp(rho, cond_exp(y, p));
  const ConjugateValue r = conjugate_sharp(rho, y);
  if (!l.resolved() || !r.resolved()) {
    throw unresolved_error("conjugate_dilatation_check: unresolved conjugate for " + rho.name());
  }
  return {l.value, r.value, l.value <= r.value + 1e-5};
}

// ---------------------------------------------------------------------------
// Eta-form of the conjugate of a transformed norm measure.

struct EtaResult {
  ExtReal value;
  bool closed_form;
  double start_value;  // objective at eta = z (may be +inf)
  int iterations;
};

/// min over eta >= 0 with {eta = 0} inside {z = 0} of
///   E[eta H*(z / eta)] + F*(||eta||*_G),   0 H*(0/0) = 0.
///
/// For H = b x^+ the minimum is F*(||z/b||*_G) in closed form. Otherwise the
/// objective is scanned along eta = s z for `eta_grid` geometric scales in
/// [1e-3, 1e3] and then refined by a multiplicative compass search on the
/// support of z; the value is the best objective found.
inline EtaResult t_sharp_eta(const OrliczTriple& t, const Density& z, int eta_grid = 64) {
  if (eta_grid < 2) throw precondition_error("t_sharp_eta: eta_grid must be >= 2");
  if (auto b = t.H.indicator_bound()) {
    const ExtReal v = transformed_conjugate_positive_part(t, z.values(), *b);
    return {v, true, v.is_finite() ? v.value() : std::numeric_limits<double>::infinity(), 0};
  }

  const SpacePtr& space = z.space();
  const std::size_t n = z.size();
  const OrliczFunction fstar = t.F.conjugate();
  auto objective = [&](const std::vector<double>& eta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (eta[i] <= 0.0) {
        if (z[i] > 0.0) return std::numeric_limits<double>::infinity();
        continue;
      }
      const ExtReal h = t.H.conjugate_at(z[i] / eta[i]);
      if (h.is_infinite()) return std::numeric_limits<double>::infinity();
      acc += space->prob(i) * eta[i] * h.value();
    }
    const ExtReal f = fstar(orlicz_norm(RandomVariable(space, eta), t.G));
    return f.is_infinite() ? std::numeric_limits<double>::infinity() : acc + f.value();
  };

  std::vector<double> eta(z.values().values().begin(), z.values().values().end());
  const double start = objective(eta);
  double best = start;
  std::vector<double> best_eta = eta;
  for (int k = 0; k < eta_grid; ++k) {
    const double s = std::pow(10.0, -3.0 + 6.0 * k / (eta_grid - 1));
    std::vector<double> cand(n);
    for (std::size_t i = 0; i < n; ++i) cand[i] = s * z[i];
    const double v = objective(cand);
    if (v < best) {
      best = v;
      best_eta = cand;
    }
  }
  int iterations = 0;
  if (std::isfinite(best)) {
    for (double h = 0.5; h > 1e-10; h *= 0.5) {
      bool improved = true;
      while (improved && iterations < 100000) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
          if (z[i] <= 0.0) continue;
          for (double f : {1.0 + h, 1.0 / (1.0 + h)}) {
            ++iterations;
            const double old = best_eta[i];
            best_eta[i] = old * f;
            const double v = objective(best_eta);
            if (v < best - 1e-15) {
              best = v;
              improved = true;
            } else {
              best_eta[i] = old;
            }
          }
        }
      }
    }
  }
  return {std::isfinite(best) ? ExtReal(best) : ExtReal::infinity(), false, start, iterations};
}

}  // namespace dmrisk
