#pragma once

#include <stdexcept>
#include <string>

namespace eamnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, channel mismatches, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's shape or value precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Spatial input size incompatible with the network strides.
class InputSizeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf showed up where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eamnet
