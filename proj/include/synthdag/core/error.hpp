#pragma once

#include <stdexcept>
#include <string>

namespace synthdag {

// Base class for every error raised by the library. Callers that only care
// about "something failed" catch this; finer handling uses the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace synthdag
