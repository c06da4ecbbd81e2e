#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <string>

#include "dmrisk/errors.hpp"

namespace dmrisk {

/// A value in (-inf, +inf]. Only the upper infinity is representable; the
/// risk functionals here never evaluate to -inf.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
      throw precondition_error("ExtReal: value must be a real number or +inf");
    }
  }

  static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(v_); }
  bool is_infinite() const { return !is_finite(); }

  /// Raw value; +inf when infinite.
  double value() const { return v_; }

  /// Finite value or a thrown precondition_error.
  double finite_value() const {
    if (!is_finite()) throw precondition_error("ExtReal: expected a finite value");
    return v_;
  }

  friend ExtReal operator+(ExtReal a, ExtReal b) { return ExtReal(a.v_ + b.v_); }
  friend ExtReal operator+(ExtReal a, double b) { return ExtReal(a.v_ + b); }
  friend ExtReal operator-(ExtReal a, double b) { return ExtReal(a.v_ - b); }

  friend auto operator<=>(const ExtReal& a, const ExtReal& b) { return a.v_ <=> b.v_; }
  friend bool operator==(const ExtReal& a, const ExtReal& b) { return a.v_ == b.v_; }

  std::string to_string() const {
    if (!is_finite()) return "inf";
    return std::to_string(v_);
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtReal& e) {
    if (e.is_finite()) return os << e.v_;
    return os << "inf";
  }

 private:
  double v_ = 0.0;
};

/// Nonnegative scaling with the closure convention 0 * inf = 0.
inline ExtReal scale_nonneg(double k, ExtReal e) {
  if (k < 0.0) throw precondition_error("scale_nonneg: negative factor");
  if (k == 0.0) return ExtReal(0.0);
  return ExtReal(k * e.value());
}

}  // namespace dmrisk
