#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nightsim {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class NonpositiveDepthError : public Error {
 public:
  using Error::Error;
};

class EmptyBankError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NoValidPixelsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class LowConfidenceError : public Error {
 public:
  LowConfidenceError(const std::string& what, std::size_t ground_pixels)
      : Error(what), ground_pixel_count(ground_pixels) {}

  std::size_t ground_pixel_count;
};

}  // namespace nightsim
