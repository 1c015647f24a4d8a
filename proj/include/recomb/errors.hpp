#pragma once

#include <stdexcept>
#include <string>

namespace recomb {

/// Raised when an argument violates an operation's precondition
/// (mismatched ground sets, negative weights, out-of-range times, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an incidence-algebra element has a vanishing diagonal entry.
class NotInvertibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace recomb
