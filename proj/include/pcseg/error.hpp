#pragma once

#include <stdexcept>
#include <string>

namespace pcseg {

/// Invalid input data: bad files, mismatched dimensions, violated preconditions.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable result (e.g. SVD on non-finite input).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace pcseg
