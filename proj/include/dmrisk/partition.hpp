#pragma once

// Finite partitions of the atom set and conditional expectations given them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dmrisk/errors.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

/// Grouping of atoms into disjoint nonempty cells. Stored canonically: cells
/// ordered by their smallest atom, atoms ascending within a cell, so equal
/// partitions compare equal.
class Partition {
 public:
  /// `labels[i]` names the cell of atom i; any label values are accepted.
  static Partition from_labels(SpacePtr space, const std::vector<std::size_t>& labels) {
    if (!space) throw precondition_error("Partition: null space");
    if (labels.size() != space->size()) {
      throw precondition_error("Partition: label count does not match atom count");
    }
    std::map<std::size_t, std::size_t> renumber;
    std::vector<std::size_t> canon(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = renumber.try_emplace(labels[i], renumber.size());
      canon[i] = it->second;
    }
    return Partition(std::move(space), std::move(canon), renumber.size());
  }

  static Partition from_cells(SpacePtr space, const std::vector<std::vector<std::size_t>>& cells) {
    if (!space) throw precondition_error("Partition: null space");
    const std::size_t n = space->size();
    std::vector<std::size_t> labels(n, n);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) throw precondition_error("Partition: empty cell");
      for (std::size_t a : cells[c]) {
        if (a >= n) throw precondition_error("Partition: atom index out of range");
        if (labels[a] != n) throw precondition_error("Partition: cells overlap");
        labels[a] = c;
      }
    }
    if (std::find(labels.begin(), labels.end(), n) != labels.end()) {
      throw precondition_error("Partition: cells do not cover every atom");
    }
    return from_labels(std::move(space), labels);
  }

  static Partition trivial(SpacePtr space) {
    const std::size_t n = space->size();
    return Partition(std::move(space), std::vector<std::size_t>(n, 0), 1);
  }

  static Partition finest(SpacePtr space) {
    std::vector<std::size_t> labels(space->size());
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    const std::size_t n = labels.size();
    return Partition(std::move(space), std::move(labels), n);
  }

  const SpacePtr& space() const { return space_; }
  std::size_t cell_count() const { return cells_.size(); }
  const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  std::size_t cell_of(std::size_t atom) const { return labels_[atom]; }

  double cell_prob(std::size_t c) const {
    double s = 0.0;
    for (std::size_t a : cells_[c]) s += space_->prob(a);
    return s;
  }

  bool is_trivial() const { return cells_.size() == 1; }
  bool is_finest() const { return cells_.size() == labels_.size(); }

  /// True when every cell of this partition lies inside a cell of `coarser`.
  bool refines(const Partition& coarser) const {
    require_same_space(space_, coarser.space_, "Partition::refines");
    for (const auto& cell : cells_) {
      const std::size_t target = coarser.labels_[cell.front()];
      for (std::size_t a : cell) {
        if (coarser.labels_[a] != target) return false;
      }
    }
    return true;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return same_space(a.space_, b.space_) && a.labels_ == b.labels_;
  }

 private:
  Partition(SpacePtr space, std::vector<std::size_t> labels, std::size_t count)
      : space_(std::move(space)), labels_(std::move(labels)), cells_(count) {
    for (std::size_t i = 0; i < labels_.size(); ++i) cells_[labels_[i]].push_back(i);
  }

  SpacePtr space_;
  std::vector<std::size_t> labels_;
  std::vector<std::vector<std::size_t>> cells_;
};

/// E[x | sigma(p)]: the probability-weighted mean of x on each cell.
inline RandomVariable cond_exp(const RandomVariable& x, const Partition& p) {
  require_same_space(x.space(), p.space(), "cond_exp");
  const auto probs = x.space()->probs();
  std::vector<double> out(x.size());
  for (const auto& cell : p.cells()) {
    double mass = 0.0;
    double sum = 0.0;
    for (std::size_t a : cell) {
      mass += probs[a];
      sum += probs[a] * x[a];
    }
    const double mean = sum / mass;
    for (std::size_t a : cell) out[a] = mean;
  }
  return RandomVariable(x.space(), std::move(out));
}

/// Coarsest common refinement: the nonempty pairwise intersections of cells.
inline Partition refine(const Partition& p, const Partition& q) {
  require_same_space(p.space(), q.space(), "refine");
  const std::size_t n = p.labels().size();
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = ids.try_emplace({p.cell_of(i), q.cell_of(i)}, ids.size());
    labels[i] = it->second;
  }
  return Partition::from_labels(p.space(), labels);
}

/// Refining chain generated by x: level j splits the sorted distinct values
/// of x into 2^j contiguous bins of (as near as possible) equal count.
/// Returns levels 0..depth; level 0 is the trivial partition, and every level
/// with 2^j >= #distinct values separates all values, where E[x | level] = x.
inline std::vector<Partition> dyadic_chain(const SpacePtr& space, const RandomVariable& x,
                                           int depth) {
  require_same_space(space, x.space(), "dyadic_chain");
  if (depth < 1) throw precondition_error("dyadic_chain: depth must be >= 1");

  std::vector<double> distinct(x.values().begin(), x.values().end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::uint64_t d = distinct.size();

  std::vector<std::uint64_t> rank(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    rank[i] = static_cast<std::uint64_t>(
        std::lower_bound(distinct.begin(), distinct.end(), x[i]) - distinct.begin());
  }
  int separating = 0;
  while ((std::uint64_t{1} << separating) < d) ++separating;

  std::vector<Partition> chain;
  chain.reserve(static_cast<std::size_t>(depth) + 1);
  std::vector<std::size_t> labels(x.size());
  for (int j = 0; j <= depth; ++j) {
    const int jj = std::min(j, separating);
    const std::uint64_t scale = std::uint64_t{1} << jj;
    // bin = floor(2^j * (r + 1/2) / d)
    for (std::size_t i = 0; i < x.size(); ++i) {
      labels[i] = static_cast<std::size_t>(((2 * rank[i] + 1) * scale) / (2 * d));
    }
    chain.push_back(Partition::from_labels(space, labels));
  }
  return chain;
}

/// Number of simultaneous within-cell cyclic shifts after which every cell has
/// completed whole cycles: the lcm of the cell sizes, saturated at 2^62.
inline std::uint64_t full_cycle_length(const Partition& p) {
  constexpr std::uint64_t kCap = std::uint64_t{1} << 62;
  std::uint64_t l = 1;
  for (const auto& cell : p.cells()) {
    const std::uint64_t m = cell.size();
    const std::uint64_t g = std::gcd(l, m);
    if (l / g > kCap / m) return kCap;
    l = l / g * m;
  }
  return l;
}

namespace detail {
inline void require_uniform(const SpacePtr& s, const char* where) {
  if (!s->is_uniform()) {
    throw unsupported_space_error(std::string(where) +
                                  ": needs a uniform space (permutations must preserve law)");
  }
}
}  // namespace detail

/// x shifted by k positions inside every cell: atom at position i of a cell
/// takes the value at position (i + k) mod size. On a uniform space this is a
/// permutation of atoms, so the result has the law of x.
inline RandomVariable cyclic_shift(const RandomVariable& x, const Partition& p, std::uint64_t k) {
  require_same_space(x.space(), p.space(), "cyclic_shift");
  detail::require_uniform(x.space(), "cyclic_shift");
  std::vector<double> out(x.size());
  for (const auto& cell : p.cells()) {
    const std::size_t m = cell.size();
    for (std::size_t i = 0; i < m; ++i) out[cell[i]] = x[cell[(i + k % m) % m]];
  }
  return RandomVariable(x.space(), std::move(out));
}

/// Average of the shifts by 0, 1, ..., j-1. With j = full_cycle_length(p)
/// this is exactly cond_exp(x, p).
inline RandomVariable cell_shuffle_average(const RandomVariable& x, const Partition& p,
                                           std::uint64_t j) {
  require_same_space(x.space(), p.space(), "cell_shuffle_average");
  detail::require_uniform(x.space(), "cell_shuffle_average");
  if (j < 1 || j > full_cycle_length(p)) {
    throw precondition_error("cell_shuffle_average: j must lie in [1, full cycle length]");
  }
  std::vector<double> out(x.size());
  for (const auto& cell : p.cells()) {
    const std::size_t m = cell.size();
    // prefix[t] = sum of the first t entries of the cell repeated twice
    std::vector<double> prefix(2 * m + 1, 0.0);
    for (std::size_t t = 0; t < 2 * m; ++t) prefix[t + 1] = prefix[t] + x[cell[t % m]];
    const double total = prefix[m];
    const std::uint64_t whole = j / m;
    const std::size_t rem = static_cast<std::size_t>(j % m);
    for (std::size_t i = 0; i < m; ++i) {
      const double partial = prefix[i + rem] - prefix[i];
      out[cell[i]] = (static_cast<double>(whole) * total + partial) / static_cast<double>(j);
    }
  }
  return RandomVariable(x.space(), std::move(out));
}

}  // namespace dmrisk
