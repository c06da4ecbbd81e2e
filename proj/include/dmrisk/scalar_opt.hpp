#pragma once

// Scalar root and minimum finders shared by the norm, hull and duality code.
// Tolerances and iteration caps are fixed so runs are reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "dmrisk/errors.hpp"

namespace dmrisk {

inline constexpr double kArgTolerance = 1e-12;
inline constexpr int kMaxIterations = 200;

struct BisectionResult {
  double lo;  // last point where the predicate was false
  double hi;  // last point where the predicate was true
  int iterations;
  double width() const { return hi - lo; }
};

/// Shrinks [lo, hi] around the switch point of a monotone predicate with
/// pred(lo) == false and pred(hi) == true. Stops when the interval width
/// falls below rel_tol * max(1, |hi|) or after max_iter halvings.
template <class Pred>
BisectionResult bisect_switch(Pred&& pred, double lo, double hi,
                              double rel_tol = kArgTolerance,
                              int max_iter = kMaxIterations) {
  int it = 0;
  for (; it < max_iter; ++it) {
    if (hi - lo <= rel_tol * std::max(1.0, std::abs(hi))) break;
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {lo, hi, it};
}

struct ScalarMin {
  double arg;
  double value;  // +inf when no finite point was seen
  double width;  // final bracket width
  int iterations;
};

/// Golden-section search for a convex (or unimodal) function that may take
/// the value +inf on part of [a, b]. The best point evaluated is returned,
/// so the reported value is always an attained objective value.
///
/// When both interior probes are infinite the finite region must lie on the
/// side of the best finite point seen so far; with no finite point seen the
/// search keeps the middle section.
template <class F>
ScalarMin golden_section(F&& f, double a, double b, double abs_tol = 1e-10,
                         int max_iter = kMaxIterations) {
  if (!(a <= b)) throw precondition_error("golden_section: empty interval");
  constexpr double kInvPhi = 0.6180339887498949;
  const double inf = std::numeric_limits<double>::infinity();

  double best_x = a;
  double best_f = inf;
  auto probe = [&](double x) {
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
    return v;
  };
  probe(a);
  probe(b);

  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = probe(c);
  double fd = probe(d);
  int it = 0;
  for (; it < max_iter && (b - a) > abs_tol; ++it) {
    bool keep_left;
    if (std::isinf(fc) && std::isinf(fd)) {
      if (std::isfinite(best_f) && best_x < c) {
        keep_left = true;
      } else if (std::isfinite(best_f) && best_x > d) {
        keep_left = false;
      } else {
        // Finite region (if any) sits between the probes.
        a = c;
        b = d;
        c = b - kInvPhi * (b - a);
        d = a + kInvPhi * (b - a);
        fc = probe(c);
        fd = probe(d);
        continue;
      }
    } else {
      keep_left = fc <= fd;
    }
    if (keep_left) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = probe(d);
    }
  }
  return {best_x, best_f, b - a, it};
}

struct Bracket {
  double lo;
  double hi;
  int doublings;
};

/// Doubles a symmetric window around `center` until the objective exceeds
/// f(center) on both ends. For convex f the minimum then lies inside.
/// Returns nullopt after max_doublings.
template <class F>
std::optional<Bracket> bracket_minimum(F&& f, double center, double step,
                                       int max_doublings = 60) {
  const double fc = f(center);
  double h = step;
  for (int k = 0; k <= max_doublings; ++k, h *= 2.0) {
    const double left = f(center - h);
    const double right = f(center + h);
    if (left > fc && right > fc) return Bracket{center - h, center + h, k};
  }
  return std::nullopt;
}

}  // namespace dmrisk
