#pragma once

// Measure families selectable by name from the command line.

#include <optional>
#include <string>
#include <utility>

#include "dmrisk/harness/battery.hpp"
#include "dmrisk/risk.hpp"

namespace dmrisk::harness {

struct MeasureOptions {
  std::string measure = "avar";
  double alpha = 0.25;
  double c = 2.0;
  double p = 2.0;
};

inline std::string format_number(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

/// avar            AVaR at level alpha
/// higher_order    T_{c,p}
/// transformed     F = c x, G = x^p, H = x^+ through the generic hull
/// transformed_exp F = c x^2, G = e^x - 1, H = x^+
inline Family make_family(const MeasureOptions& o) {
  if (o.measure == "avar") {
    std::optional<std::pair<double, double>> ho;
    if (o.alpha < 1.0) ho = std::make_pair(1.0 / o.alpha, 1.0);
    return {"avar(" + format_number(o.alpha) + ")", RiskFunctional::avar(o.alpha), ho};
  }
  if (o.measure == "higher_order") {
    return {"higher_order(" + format_number(o.c) + "," + format_number(o.p) + ")",
            RiskFunctional::higher_order(o.c, o.p), std::make_pair(o.c, o.p)};
  }
  if (o.measure == "transformed") {
    auto t = OrliczTriple::make(OrliczFunction::linear(o.c), OrliczFunction::power(o.p), Shortfall::positive_part());
    return {"transformed(" + format_number(o.c) + "x,x^" + format_number(o.p) + ",x^+)",
            RiskFunctional::transformed(std::move(t)), std::nullopt};
  }
  if (o.measure == "transformed_exp") {
    auto t = OrliczTriple::make(OrliczFunction::power(2.0, o.c), OrliczFunction::exp_minus_one(),
                                Shortfall::positive_part());
    return {"transformed(" + format_number(o.c) + "x^2,exp(x)-1,x^+)", RiskFunctional::transformed(std::move(t)),
            std::nullopt};
  }
  throw precondition_error("unknown measure '" + o.measure +
                           "' (expected avar, higher_order, transformed or transformed_exp)");
}

}  // namespace dmrisk::harness
