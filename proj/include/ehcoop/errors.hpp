#pragma once

#include <stdexcept>
#include <string>

namespace ehcoop {

// Invalid scenario parameters or an unreadable/ill-formed configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Vectors whose lengths disagree with each other or with n_slots.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arguments outside the mathematical domain (negative power, negative gain).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The brute-force oracle refuses instances whose grid would be too large.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ehcoop
