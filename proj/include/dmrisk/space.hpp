#pragma once

// Finite probability spaces and random variables on them. A finite space with
// many small atoms is the computational stand-in for a nonatomic space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmrisk/errors.hpp"

namespace dmrisk {

/// Atoms with strictly positive probabilities summing to one. Immutable;
/// shared between the variables and partitions built on it.
class ProbSpace {
 public:
  /// Probabilities whose sum is within this distance of one are rescaled;
  /// anything further off is rejected.
  static constexpr double kNormalizationTolerance = 1e-9;

  static std::shared_ptr<const ProbSpace> make(std::vector<double> probs) {
    if (probs.empty()) throw precondition_error("ProbSpace: no atoms");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!std::isfinite(probs[i]) || probs[i] <= 0.0) {
        throw precondition_error("ProbSpace: atom " + std::to_string(i) +
                                 " has non-positive probability");
      }
      sum += probs[i];
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
      throw precondition_error("ProbSpace: probabilities sum to " + std::to_string(sum));
    }
    for (double& p : probs) p /= sum;
    return std::shared_ptr<const ProbSpace>(new ProbSpace(std::move(probs), sum - 1.0));
  }

  static std::shared_ptr<const ProbSpace> uniform(std::size_t n) {
    if (n == 0) throw precondition_error("ProbSpace: no atoms");
    return std::shared_ptr<const ProbSpace>(
        new ProbSpace(std::vector<double>(n, 1.0 / static_cast<double>(n)), 0.0));
  }

  std::size_t size() const { return probs_.size(); }
  double prob(std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  double max_prob() const { return *std::max_element(probs_.begin(), probs_.end()); }

  /// Input sum minus one, before rescaling.
  double normalization_shift() const { return shift_; }

  bool is_uniform() const {
    const double u = 1.0 / static_cast<double>(probs_.size());
    return std::all_of(probs_.begin(), probs_.end(),
                       [u](double p) { return std::abs(p - u) <= 1e-12 * u + 1e-15; });
  }

 private:
  ProbSpace(std::vector<double> probs, double shift) : probs_(std::move(probs)), shift_(shift) {}

  std::vector<double> probs_;
  double shift_;
};

using SpacePtr = std::shared_ptr<const ProbSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return std::equal(a->probs().begin(), a->probs().end(), b->probs().begin(), b->probs().end());
}

inline void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* where) {
  if (!same_space(a, b)) throw precondition_error(std::string(where) + ": mismatched spaces");
}

/// A real value per atom. Every variable on a finite space is simple.
class RandomVariable {
 public:
  RandomVariable(SpacePtr space, std::vector<double> values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw precondition_error("RandomVariable: null space");
    if (values_.size() != space_->size()) {
      throw precondition_error("RandomVariable: expected " + std::to_string(space_->size()) +
                               " values, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw precondition_error("RandomVariable: non-finite value");
    }
  }

  static RandomVariable constant(SpacePtr space, double m) {
    const std::size_t n = space->size();
    return RandomVariable(std::move(space), std::vector<double>(n, m));
  }

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  /// Pointwise image under `f`.
  template <class F>
  RandomVariable map(F&& f) const {
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(), f);
    return RandomVariable(space_, std::move(out));
  }

  friend RandomVariable operator+(const RandomVariable& x, const RandomVariable& y) {
    require_same_space(x.space_, y.space_, "operator+");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values_[i] + y.values_[i];
    return RandomVariable(x.space_, std::move(out));
  }
  friend RandomVariable operator-(const RandomVariable& x, const RandomVariable& y) {
    require_same_space(x.space_, y.space_, "operator-");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values_[i] - y.values_[i];
    return RandomVariable(x.space_, std::move(out));
  }
  friend RandomVariable operator+(const RandomVariable& x, double s) {
    return x.map([s](double v) { return v + s; });
  }
  friend RandomVariable operator-(const RandomVariable& x, double s) {
    return x.map([s](double v) { return v - s; });
  }
  friend RandomVariable operator*(double k, const RandomVariable& x) {
    return x.map([k](double v) { return k * v; });
  }
  friend RandomVariable operator-(const RandomVariable& x) {
    return x.map([](double v) { return -v; });
  }

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

inline double expectation(const RandomVariable& x) {
  double s = 0.0;
  const auto p = x.space()->probs();
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * x[i];
  return s;
}

/// E[x y].
inline double inner(const RandomVariable& x, const RandomVariable& y) {
  require_same_space(x.space(), y.space(), "inner");
  double s = 0.0;
  const auto p = x.space()->probs();
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * x[i] * y[i];
  return s;
}

inline double l1_norm(const RandomVariable& x) {
  double s = 0.0;
  const auto p = x.space()->probs();
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * std::abs(x[i]);
  return s;
}

inline double l1_distance(const RandomVariable& x, const RandomVariable& y) {
  require_same_space(x.space(), y.space(), "l1_distance");
  double s = 0.0;
  const auto p = x.space()->probs();
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * std::abs(x[i] - y[i]);
  return s;
}

inline double max_abs(const RandomVariable& x) {
  double m = 0.0;
  for (double v : x.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double value_range(const RandomVariable& x) {
  const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
  return *hi - *lo;
}

inline RandomVariable abs(const RandomVariable& x) {
  return x.map([](double v) { return std::abs(v); });
}

}  // namespace dmrisk
