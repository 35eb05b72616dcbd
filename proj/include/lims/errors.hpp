#pragma once

#include <stdexcept>
#include <string>

namespace lims {

/// Covariance matrix could not be factored (non-finite entries or no positive spectrum).
class SingularCovarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// D = [A B] lacks full column rank, so the Fisher matrix cannot be inverted.
class SingularFisherError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lims
