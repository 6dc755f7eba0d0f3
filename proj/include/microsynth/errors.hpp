#pragma once

#include <stdexcept>
#include <string>

namespace microsynth {

// Malformed or inapplicable configuration artifacts: schemas, specs,
// predicates or rules that reference unknown columns, bad parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be read or violates its declared schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Consistency-rule resample budget exhausted for too many synthetic rows.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Logistic MLE diverges: quasi-complete separation in the design.
class SeparationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace microsynth
