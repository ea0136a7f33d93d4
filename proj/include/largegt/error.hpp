#pragma once

#include <stdexcept>
#include <string>

namespace largegt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

// Bad magic, version, truncation or header mismatch in a binary file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (bad shapes, k < 1, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Data is well formed but inconsistent or non-finite.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

#define LARGEGT_EXPECT(cond, ExcType, msg) \
  do {                                     \
    if (!(cond)) throw ExcType(msg);       \
  } while (0)

}  // namespace largegt
