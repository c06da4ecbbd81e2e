#pragma once

// Report serialization: a JSON document with stable key order and a flat CSV
// of refinement curves.

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dmrisk/errors.hpp"
#include "dmrisk/harness/battery.hpp"

namespace dmrisk::harness {

using Json = nlohmann::ordered_json;

/// Non-finite numbers are written as the strings "inf", "-inf" or "nan".
inline Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json to_json(const RunReport& r) {
  Json doc;
  doc["command"] = r.command;
  doc["seed"] = r.seed;
  doc["input"] = r.input;
  doc["normalization_shift"] = number(r.normalization_shift);
  doc["summary"] = {{"pass", r.count(Status::pass)}, {"fail", r.count(Status::fail)}, {"skip", r.count(Status::skip)}};
  doc["checks"] = Json::array();
  for (const auto& c : r.checks) {
    Json j;
    j["name"] = c.name;
    j["family"] = c.family;
    j["variable"] = c.variable;
    j["status"] = to_string(c.status);
    j["lhs"] = number(c.lhs);
    j["rhs"] = number(c.rhs);
    j["tolerance"] = number(c.tolerance);
    j["trials"] = c.trials;
    j["worst_trial"] = c.worst_trial;
    j["seed"] = c.seed;
    if (!c.note.empty()) j["note"] = c.note;
    if (r.timings) j["runtime_ms"] = c.runtime_ms;
    doc["checks"].push_back(std::move(j));
  }
  doc["curves"] = Json::array();
  for (const auto& cv : r.curves) {
    Json pts = Json::array();
    for (const auto& p : cv.points) pts.push_back({p.level, number(p.value), number(p.l1_gap)});
    doc["curves"].push_back({{"family", cv.family}, {"variable", cv.variable}, {"points", std::move(pts)}});
  }
  return doc;
}

/// Curves as `level,value,l1_gap,curve` rows; `curve` is family/variable.
inline std::string curves_csv(const RunReport& r) {
  std::ostringstream out;
  out << std::setprecision(17) << "level,value,l1_gap,curve\n";
  for (const auto& cv : r.curves) {
    for (const auto& p : cv.points) {
      out << p.level << ',' << p.value << ',' << p.l1_gap << ",\"" << cv.family << '/' << cv.variable << "\"\n";
    }
  }
  return out.str();
}

/// format is "json" or "csv".
inline std::string emit_report(const RunReport& r, const std::string& format) {
  if (format == "json") return to_json(r).dump(2) + "\n";
  if (format == "csv") return curves_csv(r);
  throw precondition_error("emit_report: unsupported format '" + format + "' (expected json or csv)");
}

}  // namespace dmrisk::harness
