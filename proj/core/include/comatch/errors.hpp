#pragma once

#include <stdexcept>
#include <string>

namespace comatch {

/// Caller passed a value outside an operation's contract.
class invalid_argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is structurally valid but numerically degenerate (zero vector,
/// zero-sum row, empty bank).
class degenerate_input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Engine state does not satisfy an operation's precondition.
class state_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents; message carries the offending line number.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace comatch
