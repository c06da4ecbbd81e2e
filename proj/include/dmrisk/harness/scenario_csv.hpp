#pragma once

// Scenario tables: a `probability` column followed by named value columns.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "dmrisk/errors.hpp"
#include "dmrisk/space.hpp"

namespace dmrisk::harness {

struct ScenarioTable {
  SpacePtr space;
  std::vector<std::string> names;
  std::vector<RandomVariable> columns;
  double normalization_shift = 0.0;  // raw probability sum minus one

  const RandomVariable& column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return columns[i];
    }
    throw precondition_error("no column named '" + name + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  if (s.empty()) throw csv_error(row, "empty value in column '" + col + "'");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw csv_error(row, "cannot parse '" + s + "' in column '" + col + "'");
  if (!std::isfinite(v)) throw csv_error(row, "non-finite value in column '" + col + "'");
  return v;
}

}  // namespace detail

/// Parses a scenario table. Blank lines are ignored; rows are numbered from
/// the header (row 1).
inline ScenarioTable parse_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++row;
    if (!detail::trim(line).empty()) header = detail::split_row(line);
  }
  if (header.empty()) throw csv_error(0, "empty scenario file");
  if (header[0] != "probability") throw csv_error(row, "first column must be 'probability'");
  if (header.size() < 2) throw csv_error(row, "no value columns");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw csv_error(row, "empty column name");
    for (std::size_t k = 1; k < j; ++k) {
      if (header[k] == header[j]) throw csv_error(row, "duplicate column '" + header[j] + "'");
    }
  }

  std::vector<double> probs;
  std::vector<std::vector<double>> cols(header.size() - 1);
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_row(line);
    if (cells.size() != header.size()) {
      throw csv_error(row, "expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(cells.size()));
    }
    const double p = detail::parse_number(cells[0], row, header[0]);
    if (!(p > 0.0)) throw csv_error(row, "probability must be positive, got " + cells[0]);
    probs.push_back(p);
    for (std::size_t j = 1; j < cells.size(); ++j) cols[j - 1].push_back(detail::parse_number(cells[j], row, header[j]));
  }
  if (probs.empty()) throw csv_error(0, "no scenario rows");

  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > ProbSpace::kNormalizationTolerance) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "probabilities sum to " << sum << ", more than "
        << ProbSpace::kNormalizationTolerance << " away from 1";
    throw csv_error(0, msg.str());
  }
  ScenarioTable t;
  t.space = ProbSpace::make(std::move(probs));
  t.normalization_shift = t.space->normalization_shift();
  t.names.assign(header.begin() + 1, header.end());
  for (auto& c : cols) t.columns.emplace_back(t.space, std::move(c));
  return t;
}

inline ScenarioTable ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csv_error(0, "cannot open '" + path + "'");
  return parse_csv(in);
}

/// Writes the normalized table back out with 17 significant digits.
inline std::string emit_csv(const ScenarioTable& t) {
  std::ostringstream out;
  out << std::setprecision(17) << "probability";
  for (const auto& n : t.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < t.space->size(); ++i) {
    out << t.space->prob(i);
    for (const auto& c : t.columns) out << ',' << c[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace dmrisk::harness
