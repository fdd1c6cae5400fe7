#pragma once

#include <stdexcept>
#include <string>

namespace iuq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input lies outside the support of its model.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not produce a value (empty data, no eligible pool, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad topology, impossible design settings, bad CLI values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iuq
