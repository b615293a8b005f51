#pragma once

#include <stdexcept>
#include <string>

namespace taylormlp {

// Shapes or index sets that do not fit together.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite input where a finite real is required.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Valid shapes but an unsupported setting, e.g. an expansion order above the
// exact-factorial bound.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation called on an object that is not ready for it (empty statistics).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace taylormlp
