#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmrisk {

/// Raised when an operation is called outside its documented domain
/// (mismatched spaces, out-of-range levels, malformed inputs).
class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The operation needs structure the space does not have (e.g. uniform atoms).
class unsupported_space_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The space is too coarse to emulate a nonatomic construction at the
/// requested resolution.
class space_too_coarse_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Outward doubling never produced a bracket around the minimum; for cash
/// hulls this means the objective is not coercive.
class bracket_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A conjugate value could only be bounded from below, so a quantity that
/// needs its exact value cannot be formed.
class unresolved_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario-file problems. `row()` is 1-based and counts the header as row 1;
/// zero means the problem is not tied to a row.
class csv_error : public std::runtime_error {
 public:
  csv_error(std::size_t row, const std::string& what)
      : std::runtime_error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace dmrisk
