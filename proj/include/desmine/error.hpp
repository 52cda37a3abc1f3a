#pragma once

#include <stdexcept>
#include <string>

namespace desmine {

/// Bad input data or a protocol that fails validation. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: bad flags, too few datasets. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant was breached. CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace desmine
