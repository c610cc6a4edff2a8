#pragma once

#include <stdexcept>
#include <string>

namespace sbstein {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

// Query for a state an Explicit chain has no row for.
struct StateOutOfRange : Error {
  using Error::Error;
};

// A row fails the single-birth shape or is not a probability vector.
struct NotStochastic : Error {
  using Error::Error;
};

// Work limit (state budget, pad escalation) exhausted before convergence.
struct BudgetExceeded : Error {
  using Error::Error;
};

struct ZeroBirthProbability : Error {
  using Error::Error;
};

// The requested window cannot support the computation at the stated
// tolerance (tail too heavy, boundary not stabilised, finite chain too short).
struct WindowTooSmall : Error {
  using Error::Error;
};

struct NotBirthDeath : Error {
  using Error::Error;
};

struct NotMonotone : Error {
  using Error::Error;
};

struct NotOrdered : Error {
  using Error::Error;
};

struct NotStationary : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

// Config file rejected; carries a 1-based line number when known.
struct ConfigError : InvalidParameter {
  explicit ConfigError(const std::string& what, long line_no = -1)
      : InvalidParameter(what), line(line_no) {}
  long line;
};

}  // namespace sbstein
