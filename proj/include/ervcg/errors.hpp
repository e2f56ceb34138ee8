#pragma once

#include <stdexcept>
#include <string>

namespace ervcg {

// Base class for all library errors. The CLI maps subclasses onto its
// exit-code contract (validation = 2, budget = 3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside a mechanism's valid domain, or an invalid construction.
struct DomainError : Error {
  using Error::Error;
};

// Operation requires a bounded valuation domain (H < infinity).
struct UnboundedDomain : Error {
  using Error::Error;
};

// Scoring rule has no finite bounding constants.
struct UnboundedScore : Error {
  using Error::Error;
};

// Scoring rule with constant scores; the rule-to-mechanism scale C is zero.
struct TrivialRule : Error {
  using Error::Error;
};

// Allocation setting violates the single-agent-service requirement.
struct FeasibilityError : Error {
  using Error::Error;
};

// Enumeration size exceeds the configured evaluation budget.
struct BudgetError : Error {
  using Error::Error;
};

// Malformed scenario or descriptor input; message carries the field path.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace ervcg
