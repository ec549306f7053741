#pragma once

#include <stdexcept>
#include <string>

namespace evl {

// Runtime failure inside the library (bad data, numerical trouble, I/O).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration, detected before any side effect.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace evl
