#pragma once

#include <stdexcept>
#include <string>

namespace lesioneval {

/// Bad input: malformed files, invalid arguments, violated preconditions.
/// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A postcondition that should hold by construction did not.
/// The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lesioneval
