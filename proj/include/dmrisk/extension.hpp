#pragma once

// The extension rho_bar(x) = sup over partitions of rho(E[x | pi]), its
// refinement diagnostics, and an explicit approximating partition sequence
// with uniform domination.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dmrisk/errors.hpp"
#include "dmrisk/ext_real.hpp"
#include "dmrisk/partition.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

/// Random coarsening: m cells with m uniform in [2, min(8, N)], atoms assigned
/// uniformly, redrawn until no cell is empty. A one-atom space yields the
/// trivial partition.
inline Partition random_partition(const SpacePtr& space, std::mt19937_64& rng) {
  const std::size_t n = space->size();
  const std::size_t top = std::min<std::size_t>(8, n);
  if (top < 2) return Partition::trivial(space);
  std::uniform_int_distribution<std::size_t> pick_m(2, top);
  const std::size_t m = pick_m(rng);
  std::uniform_int_distribution<std::size_t> pick_cell(0, m - 1);
  std::vector<std::size_t> labels(n);
  for (;;) {
    std::vector<bool> used(m, false);
    for (auto& l : labels) {
      l = pick_cell(rng);
      used[l] = true;
    }
    if (std::all_of(used.begin(), used.end(), [](bool b) { return b; })) break;
  }
  return Partition::from_labels(space, labels);
}

/// Smallest chain depth at which dyadic_chain separates every value of x.
inline int separating_depth(const RandomVariable& x) {
  std::vector<double> v(x.values().begin(), x.values().end());
  std::sort(v.begin(), v.end());
  const auto d = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  int j = 0;
  while ((std::size_t{1} << j) < d) ++j;
  return std::max(j, 1);
}

struct PartitionSample {
  std::string source;  // "finest", "dyadic:<level>" or "random:<k>"
  ExtReal value;
};

struct ExtensionResult {
  ExtReal value;
  Partition best_partition;
  std::string best_source;
  std::vector<PartitionSample> samples;
};

/// Evaluates rho(E[x | pi]) over the finest partition, the dyadic chain of x
/// and `budget` seeded random partitions, and returns the maximum with an
/// argmax. Candidates only displace the incumbent argmax when larger by more
/// than 1e-12, so rounding-level ties resolve to the finest partition.
template <class Rho>
ExtensionResult extend_sup(const Rho& rho, const RandomVariable& x, int budget,
                           std::uint64_t seed) {
  if (budget < 1) throw precondition_error("extend_sup: budget must be >= 1");
  const SpacePtr& space = x.space();
  const Partition finest = Partition::finest(space);
  ExtensionResult out{rho(x), finest, "finest", {}};
  out.samples.push_back({"finest", out.value});
  ExtReal incumbent = out.value;

  auto consider = [&](const Partition& p, std::string source) {
    const ExtReal v = rho(cond_exp(x, p));
    out.samples.push_back({source, v});
    if (out.value < v) out.value = v;
    if (incumbent + ExtReal(1e-12) < v) {
      incumbent = v;
      out.best_partition = p;
      out.best_source = std::move(source);
    }
  };

  const auto chain = dyadic_chain(space, x, separating_depth(x));
  for (std::size_t j = 0; j < chain.size(); ++j) consider(chain[j], "dyadic:" + std::to_string(j));

  std::mt19937_64 rng(seed);
  for (int k = 0; k < budget; ++k) consider(random_partition(space, rng), "random:" + std::to_string(k));
  return out;
}

struct ConvergencePoint {
  int level;
  ExtReal value;
  double l1_gap;  // ||E[x | pi_level] - x||_1
};

/// rho(E[x | pi_j]) along dyadic_chain(x) for j = 0..depth.
template <class Rho>
std::vector<ConvergencePoint> refinement_convergence(const Rho& rho, const RandomVariable& x,
                                                     int depth) {
  if (depth < 1) throw precondition_error("refinement_convergence: depth must be >= 1");
  const auto chain = dyadic_chain(x.space(), x, depth);
  std::vector<ConvergencePoint> out;
  out.reserve(chain.size());
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const RandomVariable y = cond_exp(x, chain[j]);
    out.push_back({static_cast<int>(j), rho(y), l1_distance(y, x)});
  }
  return out;
}

/// One member of the dominated approximating sequence.
struct DominatedStep {
  int n;
  Partition partition;
  double k1;          // smallest integer with P(|x| <= k1) > 1/2
  double eps;         // 1/n
  double k2;          // smallest integer > k1 with E[|x| 1{|x| > k2}] < eps
  double mass_a;      // P(A), within one atom of eps
  double delta;       // discretization slack 2 * max atom prob * range(x)
};

namespace detail {

inline double smallest_k1(const RandomVariable& x) {
  std::vector<std::pair<double, double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {std::abs(x[i]), x.space()->prob(i)};
  std::sort(a.begin(), a.end());
  double cum = 0.0;
  for (const auto& [v, p] : a) {
    cum += p;
    if (cum > 0.5) return std::ceil(v);
  }
  return std::ceil(a.back().first);
}

}  // namespace detail

/// Partition for a single eps in (0, 1/2]:
///  1. A inside {|x| <= k1} with P(A) >= eps, taking atoms in index order;
///  2. Omega' = {|x| <= k2} \ A cut into value bins of width eps/2, so each
///     cell mean is within eps of its members;
///  3. the remaining atoms Omega \ Omega' as one extra cell.
/// Needs max atom probability <= eps/4 so that P(A) = eps is realized to
/// within one small atom.
inline DominatedStep dominated_partition(const RandomVariable& x, double eps) {
  const SpacePtr& space = x.space();
  if (!(eps > 0.0 && eps <= 0.5)) throw precondition_error("dominated_partition: eps must lie in (0, 1/2]");
  if (space->max_prob() > eps / 4.0) {
    throw space_too_coarse_error("dominated_partition: atom probability " +
                                 std::to_string(space->max_prob()) + " exceeds eps/4 = " +
                                 std::to_string(eps / 4.0));
  }
  const auto probs = space->probs();
  const double k1 = detail::smallest_k1(x);

  std::vector<bool> in_a(x.size(), false);
  double mass_a = 0.0;
  for (std::size_t i = 0; i < x.size() && mass_a < eps; ++i) {
    if (std::abs(x[i]) <= k1) {
      in_a[i] = true;
      mass_a += probs[i];
    }
  }

  double k2 = k1 + 1.0;
  for (;; k2 += 1.0) {
    double tail = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > k2) tail += probs[i] * std::abs(x[i]);
    }
    if (tail < eps) break;
  }

  // Label 0 is Omega \ Omega'; bins of Omega' are 1 + bin index.
  const double width = eps / 2.0;
  std::vector<std::size_t> labels(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (in_a[i] || std::abs(x[i]) > k2) continue;
    labels[i] = 1 + static_cast<std::size_t>(std::floor((x[i] + k2) / width));
  }
  const double delta = 2.0 * space->max_prob() * value_range(x);
  return {0, Partition::from_labels(space, labels), k1, eps, k2, mass_a, delta};
}

/// The sequence pi_n for n = 2..n_max with eps = 1/n. Along it
/// |E[x|pi_n]| <= |x| + k1 + 1 componentwise and
/// ||E[x|pi_n] - x||_1 < (3 + 2 k1)/n, up to the reported slack delta.
inline std::vector<DominatedStep> lemma21_sequence(const RandomVariable& x, int n_max) {
  if (n_max < 2) throw precondition_error("lemma21_sequence: n_max must be >= 2");
  if (x.space()->max_prob() > 0.25 / n_max) {
    throw space_too_coarse_error("lemma21_sequence: atom probability " +
                                 std::to_string(x.space()->max_prob()) +
                                 " too large for n_max = " + std::to_string(n_max));
  }
  std::vector<DominatedStep> out;
  for (int n = 2; n <= n_max; ++n) {
    DominatedStep s = dominated_partition(x, 1.0 / n);
    s.n = n;
    out.push_back(std::move(s));
  }
  return out;
}

struct DominationCheck {
  double domination_excess;  // max_i |E[x|pi]_i| - (|x_i| + k1 + 1 + delta); <= 0 means it holds
  double l1_gap;
  double l1_bound;           // (3 + 2 k1) eps + delta
  bool holds() const { return domination_excess <= 0.0 && l1_gap < l1_bound; }
};

inline DominationCheck check_domination(const RandomVariable& x, const DominatedStep& s) {
  const RandomVariable y = cond_exp(x, s.partition);
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    excess = std::max(excess, std::abs(y[i]) - (std::abs(x[i]) + s.k1 + 1.0 + s.delta));
  }
  return {excess, l1_distance(y, x), (3.0 + 2.0 * s.k1) * s.eps + s.delta};
}

/// Splits every atom into `copies` equal atoms: the same law on a finer space.
inline RandomVariable split_atoms(const RandomVariable& x, std::size_t copies) {
  if (copies == 0) throw precondition_error("split_atoms: copies must be >= 1");
  std::vector<double> probs;
  std::vector<double> vals;
  probs.reserve(x.size() * copies);
  vals.reserve(x.size() * copies);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < copies; ++c) {
      probs.push_back(x.space()->prob(i) / static_cast<double>(copies));
      vals.push_back(x[i]);
    }
  }
  return RandomVariable(ProbSpace::make(std::move(probs)), std::move(vals));
}

}  // namespace dmrisk
