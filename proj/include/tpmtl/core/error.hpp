#pragma once

#include <stdexcept>
#include <string>

namespace tpmtl {

// Exit codes used by the command-line front end map onto these families:
// DimensionError/ConfigError/ContractError -> usage-level failures,
// ValidationError/CorruptionError -> 2, NumericalError -> 3.

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tpmtl
