#pragma once

// Orlicz functions, their convex conjugates, and the Luxemburg / Orlicz norms
// they generate on a finite space.
//
// On a finite space every variable lies in every Orlicz space, so L^G and M^G
// are not modelled as types. (For H(x) = x^+ the natural domain of the
// transformed norm measures is L^G + L^1_+, which is again everything here.)

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <algorithm>
#include <string>
#include <utility>
#include <variant>

#include "dmrisk/errors.hpp"
#include "dmrisk/ext_real.hpp"
#include "dmrisk/scalar_opt.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

namespace detail {
inline constexpr double kInf = std::numeric_limits<double>::infinity();
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

/// Convex nondecreasing function [0, inf) -> (-inf, inf]. Used for the Orlicz
/// function G, for the outer transform F, and for their conjugates.
class OrliczFunction {
 public:
  struct Power {  // coef * x^p, p > 1
    double coef;
    double exponent;
  };
  struct Linear {  // a * x
    double slope;
  };
  struct Cap {  // 0 on [0, threshold], +inf beyond
    double threshold;
  };
  struct LinearCap {  // c * x on [0, threshold], +inf beyond
    double slope;
    double threshold;
  };
  struct Hinge {  // s * (x - knee)^+
    double slope;
    double knee;
  };
  struct ExpMinusOne {};   // e^x - 1
  struct ExpConjugate {};  // y log y - y + 1 for y >= 1, else 0
  struct Custom {
    std::string name;
    std::function<double(double)> eval;
    std::function<double(double)> conj;
    double slope_bound;  // certified upper bound on lim G(s)/s, inf if unknown
  };
  using Kind = std::variant<Power, Linear, Cap, LinearCap, Hinge, ExpMinusOne, ExpConjugate, Custom>;

  static OrliczFunction power(double p, double coef = 1.0) {
    if (!(p >= 1.0) || !(coef > 0.0)) throw precondition_error("power: need p >= 1, coef > 0");
    if (p == 1.0) return linear(coef);
    return OrliczFunction(Power{coef, p});
  }
  static OrliczFunction linear(double a) {
    if (!(a > 0.0)) throw precondition_error("linear: slope must be positive");
    return OrliczFunction(Linear{a});
  }
  static OrliczFunction cap_at(double threshold) {
    if (!(threshold > 0.0)) throw precondition_error("cap_at: threshold must be positive");
    return OrliczFunction(Cap{threshold});
  }
  static OrliczFunction linear_cap(double slope, double threshold) {
    if (!(slope >= 0.0) || !(threshold >= 0.0)) {
      throw precondition_error("linear_cap: slope and threshold must be nonnegative");
    }
    return OrliczFunction(LinearCap{slope, threshold});
  }
  static OrliczFunction hinge(double slope, double knee) {
    if (!(slope > 0.0) || !(knee >= 0.0)) throw precondition_error("hinge: bad parameters");
    return OrliczFunction(Hinge{slope, knee});
  }
  static OrliczFunction exp_minus_one() { return OrliczFunction(ExpMinusOne{}); }
  /// A user function must come with its conjugate; numeric conjugation is
  /// only used to cross-check it.
  static OrliczFunction custom(std::string name, std::function<double(double)> eval,
                               std::function<double(double)> conj,
                               double slope_bound = detail::kInf) {
    if (!eval || !conj) throw precondition_error("custom: evaluator and conjugate required");
    return OrliczFunction(Custom{std::move(name), std::move(eval), std::move(conj), slope_bound});
  }

  const Kind& kind() const { return kind_; }

  /// Value at x >= 0.
  ExtReal operator()(double x) const {
    if (!(x >= 0.0)) throw precondition_error("OrliczFunction: argument must be >= 0");
    using detail::kInf;
    return std::visit(
        detail::overloaded{
            [x](const Power& k) { return ExtReal(k.coef * std::pow(x, k.exponent)); },
            [x](const Linear& k) { return ExtReal(k.slope * x); },
            [x](const Cap& k) { return x <= k.threshold ? ExtReal(0.0) : ExtReal::infinity(); },
            [x](const LinearCap& k) {
              return x <= k.threshold ? ExtReal(k.slope * x) : ExtReal::infinity();
            },
            [x](const Hinge& k) { return ExtReal(k.slope * std::max(0.0, x - k.knee)); },
            [x](const ExpMinusOne&) { return ExtReal(std::expm1(x)); },
            [x](const ExpConjugate&) {
              return x <= 1.0 ? ExtReal(0.0) : ExtReal(x * std::log(x) - x + 1.0);
            },
            [x](const Custom& k) { return ExtReal(k.eval(x)); },
        },
        kind_);
  }

  /// The extended map that sends +inf to +inf.
  ExtReal operator()(ExtReal x) const {
    if (x.is_infinite()) return ExtReal::infinity();
    return (*this)(x.value());
  }

  /// G*(y) = sup_{x >= 0} { x y - G(x) }, closed form for every built-in kind.
  OrliczFunction conjugate() const {
    return std::visit(
        detail::overloaded{
            [](const Power& k) {
              const double q = k.exponent / (k.exponent - 1.0);
              const double coef = k.coef * (k.exponent - 1.0) * std::pow(k.coef * k.exponent, -q);
              return OrliczFunction(Power{coef, q});
            },
            [](const Linear& k) { return OrliczFunction(Cap{k.slope}); },
            [](const Cap& k) { return OrliczFunction(Linear{k.threshold}); },
            [](const LinearCap& k) { return OrliczFunction(Hinge{k.threshold, k.slope}); },
            [](const Hinge& k) { return OrliczFunction(LinearCap{k.knee, k.slope}); },
            [](const ExpMinusOne&) { return OrliczFunction(ExpConjugate{}); },
            [](const ExpConjugate&) { return OrliczFunction(ExpMinusOne{}); },
            [](const Custom& k) {
              return OrliczFunction(Custom{k.name + "*", k.conj, k.eval, detail::kInf});
            },
        },
        kind_);
  }

  /// Certified upper bound on lim_{s->inf} G(s)/s; +inf when G is
  /// superlinear, takes the value +inf, or the bound is unknown.
  double asymptotic_slope_upper() const {
    return std::visit(detail::overloaded{
                          [](const Linear& k) { return k.slope; },
                          [](const Hinge& k) { return k.slope; },
                          [](const Custom& k) { return k.slope_bound; },
                          [](const auto&) { return detail::kInf; },
                      },
                      kind_);
  }

  /// sup{x : G(x) < inf}.
  double domain_end() const {
    return std::visit(detail::overloaded{
                          [](const Cap& k) { return k.threshold; },
                          [](const LinearCap& k) { return k.threshold; },
                          [](const auto&) { return detail::kInf; },
                      },
                      kind_);
  }

  std::string name() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return std::visit(
        detail::overloaded{
            [&](const Power& k) {
              return (k.coef == 1.0 ? std::string() : num(k.coef) + "*") + "x^" + num(k.exponent);
            },
            [&](const Linear& k) { return num(k.slope) + "*x"; },
            [&](const Cap& k) { return "cap(" + num(k.threshold) + ")"; },
            [&](const LinearCap& k) {
              return num(k.slope) + "*x|cap(" + num(k.threshold) + ")";
            },
            [&](const Hinge& k) { return num(k.slope) + "*(x-" + num(k.knee) + ")^+"; },
            [](const ExpMinusOne&) { return std::string("exp(x)-1"); },
            [](const ExpConjugate&) { return std::string("(exp(x)-1)*"); },
            [](const Custom& k) { return k.name; },
        },
        kind_);
  }

 private:
  explicit OrliczFunction(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Convex nondecreasing H : R -> [0, inf), the shortfall transform.
class Shortfall {
 public:
  struct PositivePart {  // b * x^+
    double slope;
  };
  struct Custom {
    std::string name;
    std::function<double(double)> eval;
    std::function<double(double)> conj;  // may return +inf
    double slope_bound;
  };
  using Kind = std::variant<PositivePart, Custom>;

  static Shortfall positive_part(double slope = 1.0) {
    if (!(slope > 0.0)) throw precondition_error("positive_part: slope must be positive");
    return Shortfall(PositivePart{slope});
  }
  static Shortfall custom(std::string name, std::function<double(double)> eval,
                          std::function<double(double)> conj,
                          double slope_bound = detail::kInf) {
    if (!eval || !conj) throw precondition_error("Shortfall::custom: evaluator and conjugate required");
    return Shortfall(Custom{std::move(name), std::move(eval), std::move(conj), slope_bound});
  }

  const Kind& kind() const { return kind_; }

  double operator()(double x) const {
    return std::visit(detail::overloaded{
                          [x](const PositivePart& k) { return k.slope * std::max(0.0, x); },
                          [x](const Custom& k) { return k.eval(x); },
                      },
                      kind_);
  }

  /// H*(y) = sup_x { x y - H(x) }.
  ExtReal conjugate_at(double y) const {
    return std::visit(detail::overloaded{
                          [y](const PositivePart& k) {
                            return (y >= 0.0 && y <= k.slope) ? ExtReal(0.0) : ExtReal::infinity();
                          },
                          [y](const Custom& k) { return ExtReal(k.conj(y)); },
                      },
                      kind_);
  }

  /// When H* is the indicator of [0, b], returns b.
  std::optional<double> indicator_bound() const {
    if (const auto* pp = std::get_if<PositivePart>(&kind_)) return pp->slope;
    return std::nullopt;
  }

  double asymptotic_slope_upper() const {
    return std::visit(detail::overloaded{
                          [](const PositivePart& k) { return k.slope; },
                          [](const Custom& k) { return k.slope_bound; },
                      },
                      kind_);
  }

  std::string name() const {
    return std::visit(detail::overloaded{
                          [](const PositivePart& k) {
                            return k.slope == 1.0 ? std::string("x^+")
                                                  : std::to_string(k.slope) + "*x^+";
                          },
                          [](const Custom& k) { return k.name; },
                      },
                      kind_);
  }

 private:
  explicit Shortfall(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Result of a grid check of the Orlicz-function axioms.
struct OrliczShape {
  bool zero_at_origin = false;
  bool nondecreasing = false;
  bool convex = false;
  bool unbounded = false;
  bool ok() const { return zero_at_origin && nondecreasing && convex && unbounded; }
};

/// Checks G(0) = 0, monotonicity, midpoint convexity (finite values, 1e-10
/// relative) and growth on a geometric grid.
inline OrliczShape check_orlicz_shape(const OrliczFunction& g) {
  OrliczShape s;
  s.zero_at_origin = g(0.0).value() == 0.0;
  s.nondecreasing = true;
  s.convex = true;
  double prev = g(0.0).value();
  for (int k = -20; k <= 20; ++k) {
    const double a = std::ldexp(1.0, k);
    const double ga = g(a).value();
    if (ga < prev) s.nondecreasing = false;
    prev = ga;
    const double b = 1.5 * a;
    const double gb = g(b).value();
    const double gm = g(0.5 * (a + b)).value();
    if (std::isfinite(ga) && std::isfinite(gb)) {
      const double rhs = 0.5 * (ga + gb);
      if (gm > rhs + 1e-10 * std::max(1.0, std::abs(rhs))) s.convex = false;
    }
  }
  const double far = g(std::ldexp(1.0, 40)).value();
  s.unbounded = far > 1e6;
  return s;
}

// --- norms ------------------------------------------------------------------

namespace detail {

/// E[G(|x| / lambda)] with +inf propagation.
inline ExtReal modular(const RandomVariable& x, const OrliczFunction& g, double lambda) {
  double acc = 0.0;
  const auto p = x.space()->probs();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const ExtReal v = g(std::abs(x[i]) / lambda);
    if (v.is_infinite()) return ExtReal::infinity();
    acc += p[i] * v.value();
  }
  return ExtReal(acc);
}

}  // namespace detail

/// Luxemburg norm inf{lambda > 0 : E[G(|x|/lambda)] <= 1} by bisection on
/// lambda, bracketed by doubling / halving from E|x| + 1.
inline ExtReal luxemburg_norm_bisect(const RandomVariable& x, const OrliczFunction& g) {
  if (max_abs(x) == 0.0) return ExtReal(0.0);
  auto within = [&](double lam) { return detail::modular(x, g, lam).value() <= 1.0; };
  double hi = l1_norm(x) + 1.0;
  int guard = 0;
  while (!within(hi)) {
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) return ExtReal::infinity();
  }
  double lo = 0.5 * hi;
  guard = 0;
  while (within(lo)) {
    lo *= 0.5;
    if (++guard > 2000) return ExtReal(0.0);
  }
  const auto r = bisect_switch(within, lo, hi, kArgTolerance, kMaxIterations);
  return ExtReal(r.hi);
}

/// Luxemburg norm ||x||_G. Closed forms for the power, linear and cap kinds;
/// bisection otherwise.
inline ExtReal luxemburg_norm(const RandomVariable& x, const OrliczFunction& g) {
  if (max_abs(x) == 0.0) return ExtReal(0.0);
  if (const auto* pw = std::get_if<OrliczFunction::Power>(&g.kind())) {
    double acc = 0.0;
    const auto p = x.space()->probs();
    // Scale by max|x| so large exponents do not overflow.
    const double m = max_abs(x);
    for (std::size_t i = 0; i < x.size(); ++i) acc += p[i] * std::pow(std::abs(x[i]) / m, pw->exponent);
    return ExtReal(m * std::pow(pw->coef * acc, 1.0 / pw->exponent));
  }
  if (const auto* li = std::get_if<OrliczFunction::Linear>(&g.kind())) {
    return ExtReal(li->slope * l1_norm(x));
  }
  if (const auto* cap = std::get_if<OrliczFunction::Cap>(&g.kind())) {
    return ExtReal(max_abs(x) / cap->threshold);
  }
  return luxemburg_norm_bisect(x, g);
}

/// G^{-1}(1) = sup{t > 0 : G(t) <= 1} by doubling and bisection.
inline double g_inv_one_bisect(const OrliczFunction& g) {
  auto above = [&](double t) { return g(t).value() > 1.0; };
  double hi = 1.0;
  int guard = 0;
  while (!above(hi)) {
    hi *= 2.0;
    if (++guard > 2000) return detail::kInf;
  }
  double lo = 0.5 * hi;
  while (above(lo)) {
    lo *= 0.5;
    if (++guard > 4000) return 0.0;
  }
  return bisect_switch(above, lo, hi, kArgTolerance, kMaxIterations).lo;
}

/// G^{-1}(1); equals 1 / ||1||_G. Exact for built-in kinds.
inline double g_inv_one(const OrliczFunction& g) {
  return std::visit(
      detail::overloaded{
          [](const OrliczFunction::Power& k) { return std::pow(k.coef, -1.0 / k.exponent); },
          [](const OrliczFunction::Linear& k) { return 1.0 / k.slope; },
          [](const OrliczFunction::Cap& k) { return k.threshold; },
          [](const OrliczFunction::LinearCap& k) {
            return k.slope > 0.0 ? std::min(1.0 / k.slope, k.threshold) : k.threshold;
          },
          [](const OrliczFunction::Hinge& k) { return k.knee + 1.0 / k.slope; },
          [](const OrliczFunction::ExpMinusOne&) { return std::numbers::ln2; },
          [](const OrliczFunction::ExpConjugate&) { return std::numbers::e; },
          [&g](const OrliczFunction::Custom&) { return g_inv_one_bisect(g); },
      },
      g.kind());
}

/// Orlicz norm through the Amemiya formula
///   ||x||*_G = inf_{k>0} (1/k) (1 + E[G*(k|x|)]),
/// minimized in t = 1/k, where the objective t (1 + E[G*(|x|/t)]) is convex.
inline double orlicz_norm_amemiya(const RandomVariable& x, const OrliczFunction& g) {
  const double m = max_abs(x);
  if (m == 0.0) return 0.0;
  const OrliczFunction gs = g.conjugate();
  auto psi = [&](double t) {
    if (t <= 0.0) return detail::kInf;
    const ExtReal e = detail::modular(x, gs, t);
    if (e.is_infinite()) return detail::kInf;
    return t * (1.0 + e.value());
  };
  const double dom = gs.domain_end();
  const double t_min = std::isfinite(dom) ? m / dom : 0.0;
  double t = std::max(2.0 * t_min, m);
  int guard = 0;
  while (psi(2.0 * t) < psi(t) && ++guard < 400) t *= 2.0;
  const double hi = 2.0 * t;
  const auto r = golden_section(psi, t_min, hi, kArgTolerance * hi, 400);
  return r.value;
}

/// Orlicz norm ||x||*_G = sup{E[x y] : ||y||_G <= 1}. Closed forms (dual
/// norms) for the power, linear and cap kinds; Amemiya minimization otherwise.
inline double orlicz_norm(const RandomVariable& x, const OrliczFunction& g) {
  if (max_abs(x) == 0.0) return 0.0;
  if (const auto* pw = std::get_if<OrliczFunction::Power>(&g.kind())) {
    const double q = pw->exponent / (pw->exponent - 1.0);
    const auto p = x.space()->probs();
    const double m = max_abs(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += p[i] * std::pow(std::abs(x[i]) / m, q);
    return m * std::pow(acc, 1.0 / q) * std::pow(pw->coef, -1.0 / pw->exponent);
  }
  if (const auto* li = std::get_if<OrliczFunction::Linear>(&g.kind())) {
    return max_abs(x) / li->slope;
  }
  if (const auto* cap = std::get_if<OrliczFunction::Cap>(&g.kind())) {
    return cap->threshold * l1_norm(x);
  }
  return orlicz_norm_amemiya(x, g);
}

}  // namespace dmrisk
