#pragma once

// Risk functionals: AVaR, the transformed norm family built from (F, G, H),
// and the cash-additive hull that turns f into a cash-additive measure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "dmrisk/errors.hpp"
#include "dmrisk/ext_real.hpp"
#include "dmrisk/orlicz.hpp"
#include "dmrisk/quantile.hpp"
#include "dmrisk/scalar_opt.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk {

/// AVaR_alpha(x) = (1/alpha) * integral of VaR_t(x) over (0, alpha], exact.
inline double avar(const RandomVariable& x, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw precondition_error("avar: alpha must lie in (0, 1]");
  return var_integral(distribution(x), alpha) / alpha;
}

enum class Tri { holds, fails, unknown };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::holds: return "holds";
    case Tri::fails: return "fails";
    default: return "unknown";
  }
}

struct Fgh2Probe {
  Tri status;
  double slope_f_lower;  // last difference quotient of F (inf if F hit +inf)
  double slope_h_lower;
  double g_inv_one;
};

/// Decides lim_{s->inf} F(H(s)) - G^{-1}(1) s = inf by comparing the product
/// of asymptotic slopes a = lim F(s)/s, b = lim H(s)/s with G^{-1}(1).
/// Difference quotients of a convex function are nondecreasing, so the
/// quotient at s = 2^60 is a certified lower bound; failure needs the
/// analytic upper bounds carried by the built-in kinds.
inline Fgh2Probe fgh2_probe(const OrliczFunction& f, const OrliczFunction& g, const Shortfall& h) {
  const double g1 = g_inv_one(g);
  const double f0 = f(0.0).finite_value();
  const double h0 = h(0.0);
  double a = 0.0;
  double b = 0.0;
  for (int k = 0; k <= 60; ++k) {
    const double s = std::ldexp(1.0, k);
    const ExtReal fs = f(s);
    if (fs.is_infinite()) {
      a = std::numeric_limits<double>::infinity();
      break;
    }
    a = (fs.value() - f0) / s;
  }
  for (int k = 0; k <= 60; ++k) {
    const double s = std::ldexp(1.0, k);
    b = (h(s) - h0) / s;
  }
  Tri status = Tri::unknown;
  if (a * b > g1 + 1e-9) {
    status = Tri::holds;
  } else if (f.asymptotic_slope_upper() * h.asymptotic_slope_upper() <= g1) {
    status = Tri::fails;
  }
  return {status, a, b, g1};
}

inline Tri fgh2_check(const OrliczFunction& f, const OrliczFunction& g, const Shortfall& h) {
  return fgh2_probe(f, g, h).status;
}

/// Searches for s, eps with F((H(s) + eps) / G^{-1}(1)) < inf. The condition
/// is existential, so a miss is reported as unknown, never as a failure.
inline Tri fgh1_check(const OrliczFunction& f, const OrliczFunction& g, const Shortfall& h) {
  const double g1 = g_inv_one(g);
  std::vector<double> grid{0.0};
  for (int k = -20; k <= 20; ++k) {
    grid.push_back(-std::ldexp(1.0, k));
    grid.push_back(std::ldexp(1.0, k));
  }
  for (double s : grid) {
    for (double eps : {1.0, 1e-3, 1e-6}) {
      if (f((h(s) + eps) / g1).is_finite()) return Tri::holds;
    }
  }
  return Tri::unknown;
}

/// The data (F, G, H) of a transformed norm risk measure together with the
/// results of the two growth-condition checks.
struct OrliczTriple {
  OrliczFunction F;
  OrliczFunction G;
  Shortfall H;
  Tri fgh1 = Tri::unknown;
  Tri fgh2 = Tri::unknown;

  /// Validates G as a real-valued Orlicz function and F(0) < inf, then fills
  /// both flags.
  static OrliczTriple make(OrliczFunction f, OrliczFunction g, Shortfall h) {
    const auto shape = check_orlicz_shape(g);
    if (!shape.ok() || std::isfinite(g.domain_end())) {
      throw precondition_error("OrliczTriple: G must be a real-valued Orlicz function, got " +
                               g.name());
    }
    if (f(0.0).is_infinite()) throw precondition_error("OrliczTriple: F(0) must be finite");
    OrliczTriple t{std::move(f), std::move(g), std::move(h)};
    t.fgh1 = fgh1_check(t.F, t.G, t.H);
    t.fgh2 = fgh2_check(t.F, t.G, t.H);
    return t;
  }

  /// F(x) = c x, G(x) = x^p, H(x) = x^+. p = 1 is admitted as the AVaR
  /// mode with c = 1/alpha.
  static OrliczTriple higher_order(double c, double p) {
    if (!(c > 1.0) || !(p >= 1.0)) throw precondition_error("higher_order: need c > 1, p >= 1");
    return make(OrliczFunction::linear(c), OrliczFunction::power(p), Shortfall::positive_part());
  }

  std::string name() const {
    return "F=" + F.name() + ",G=" + G.name() + ",H=" + H.name();
  }
};

/// f(x) = F(||H(-x)||_G), with F(+inf) = +inf.
inline ExtReal f_transformed(const RandomVariable& x, const OrliczTriple& t) {
  const RandomVariable hx = x.map([&](double v) { return t.H(-v); });
  return t.F(luxemburg_norm(hx, t.G));
}

struct HullResult {
  ExtReal value;
  double minimizer;
  double width;  // final golden-section bracket
  int iterations;
};

/// Cash-additive hull rho^f(x) = min_s { f(x - s) - s }.
///
/// The objective is convex in s. A symmetric window around E[x] is doubled
/// until both ends exceed the center value, then golden-section search runs
/// to an argument tolerance of 1e-12 relative. Throws bracket_error after 60
/// doublings, which means f is not coercive.
template <class F>
HullResult cash_hull(const F& f, const RandomVariable& x) {
  auto objective = [&](double s) -> double {
    const ExtReal v = f(x - s);
    return v.is_infinite() ? std::numeric_limits<double>::infinity() : v.value() - s;
  };
  double center = expectation(x);
  const double step = std::max(1.0, value_range(x));
  if (!std::isfinite(objective(center))) {
    bool found = false;
    for (int k = 0; k <= 60 && !found; ++k) {
      const double h = step * std::ldexp(1.0, k);
      for (double s : {center - h, center + h}) {
        if (std::isfinite(objective(s))) {
          center = s;
          found = true;
          break;
        }
      }
    }
    if (!found) return {ExtReal::infinity(), center, 0.0, 0};
  }
  const auto br = bracket_minimum(objective, center, step, 60);
  if (!br) throw bracket_error("cash_hull: objective not coercive (no bracket after 60 doublings)");
  const double tol = 1e-12 * std::max({1.0, std::abs(br->lo), std::abs(br->hi)});
  const auto r = golden_section(objective, br->lo, br->hi, tol, kMaxIterations);
  return {ExtReal(r.value), r.arg, r.width, r.iterations};
}

/// Cash-additive hull of f_transformed, with the minimizer.
inline HullResult transformed_hull(const RandomVariable& x, const OrliczTriple& t) {
  if (t.fgh2 == Tri::fails) {
    throw precondition_error("transformed_T: growth condition FGH2 fails for " + t.name());
  }
  return cash_hull([&t](const RandomVariable& y) { return f_transformed(y, t); }, x);
}

/// T(x) = inf_s { F(||H(s - x)||_G) - s }.
inline ExtReal transformed_T(const RandomVariable& x, const OrliczTriple& t) {
  return transformed_hull(x, t).value;
}

/// T_{c,p}(x) = inf_s { c ||(s - x)^+||_p - s }.
inline double higher_order_T(const RandomVariable& x, double c, double p) {
  return transformed_T(x, OrliczTriple::higher_order(c, p)).finite_value();
}

/// A risk functional from one of the supported families, or a user callable.
class RiskFunctional {
 public:
  struct Avar {
    double alpha;
  };
  struct HigherOrder {
    double c;
    double p;
    OrliczTriple triple;
  };
  struct Transformed {
    OrliczTriple triple;
  };
  struct Custom {
    std::string name;
    std::function<ExtReal(const RandomVariable&)> eval;
  };
  using Kind = std::variant<Avar, HigherOrder, Transformed, Custom>;

  static RiskFunctional avar(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw precondition_error("avar: alpha must lie in (0, 1]");
    return RiskFunctional(Avar{alpha});
  }
  static RiskFunctional higher_order(double c, double p) {
    return RiskFunctional(HigherOrder{c, p, OrliczTriple::higher_order(c, p)});
  }
  static RiskFunctional transformed(OrliczTriple t) {
    if (t.fgh2 == Tri::fails) throw precondition_error("transformed: FGH2 fails for " + t.name());
    return RiskFunctional(Transformed{std::move(t)});
  }
  static RiskFunctional custom(std::string name, std::function<ExtReal(const RandomVariable&)> f) {
    return RiskFunctional(Custom{std::move(name), std::move(f)});
  }

  const Kind& kind() const { return kind_; }

  ExtReal operator()(const RandomVariable& x) const {
    return std::visit(
        detail::overloaded{
            [&x](const Avar& k) { return ExtReal(dmrisk::avar(x, k.alpha)); },
            [&x](const HigherOrder& k) { return transformed_T(x, k.triple); },
            [&x](const Transformed& k) { return transformed_T(x, k.triple); },
            [&x](const Custom& k) { return k.eval(x); },
        },
        kind_);
  }

  /// The built-in families are cash-additive, monotone and convex.
  bool is_builtin() const { return !std::holds_alternative<Custom>(kind_); }

  std::string name() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return std::visit(
        detail::overloaded{
            [&](const Avar& k) { return "avar(" + num(k.alpha) + ")"; },
            [&](const HigherOrder& k) { return "higher_order(" + num(k.c) + "," + num(k.p) + ")"; },
            [](const Transformed& k) { return "transformed(" + k.triple.name() + ")"; },
            [](const Custom& k) { return k.name; },
        },
        kind_);
  }

 private:
  explicit RiskFunctional(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

}  // namespace dmrisk
