#pragma once

#include <stdexcept>
#include <string>

namespace ope {

/// Malformed or inconsistent input data (CSV contents, dataset invariants).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration: unknown keys, bad values, wrong types.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or estimator could not be computed from the inputs it was given.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ope
