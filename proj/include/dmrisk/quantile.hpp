#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "dmrisk/errors.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

struct Mass {
  double value;
  double prob;
};

/// Distinct values of x in ascending order with their total probabilities.
inline std::vector<Mass> distribution(const RandomVariable& x) {
  std::vector<std::pair<double, double>> pts(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pts[i] = {x[i], x.space()->prob(i)};
  std::sort(pts.begin(), pts.end());
  std::vector<Mass> out;
  for (const auto& [v, p] : pts) {
    if (!out.empty() && out.back().value == v) {
      out.back().prob += p;
    } else {
      out.push_back({v, p});
    }
  }
  return out;
}

/// VaR_t(x) = inf{m : P(x + m < 0) <= t} for t in (0, 1).
///
/// The infimum is -v_k for the smallest distinct value v_k whose cumulative
/// probability P(x <= v_k) exceeds t. At t = 1 the literal set is unbounded
/// below; we return the left limit -max(x) instead.
inline double quantile_var(const RandomVariable& x, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw precondition_error("quantile_var: t must lie in (0, 1]");
  const auto dist = distribution(x);
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < dist.size(); ++k) {
    cum += dist[k].prob;
    if (cum > t + 1e-14) return -dist[k].value;
  }
  return -dist.back().value;
}

/// Integral of VaR_t(x) over t in (0, alpha], evaluated exactly from the
/// step structure of t -> VaR_t.
inline double var_integral(const std::vector<Mass>& dist, double alpha) {
  double cum = 0.0;
  double acc = 0.0;
  for (const auto& m : dist) {
    if (cum >= alpha) break;
    const double width = std::min(m.prob, alpha - cum);
    acc -= m.value * width;
    cum += m.prob;
  }
  // Rounding can leave cum a hair below one at alpha = 1.
  if (cum < alpha) acc -= dist.back().value * (alpha - cum);
  return acc;
}

}  // namespace dmrisk
