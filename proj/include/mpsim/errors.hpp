#pragma once

#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace mpsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed circuit text. `line` is 1-based; 0 means "whole file".
class ParseError : public Error {
public:
  ParseError(int line, const std::string& message)
      : Error(fmt::format("line {}: {}", line, message)), line_(line), message_(message) {}

  int line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

private:
  int line_;
  std::string message_;
};

/// Matrix chain is inconsistent (dimension mismatch, vanished block, ...).
class CorruptState : public Error {
public:
  using Error::Error;
};

/// P(y) * 2^n_in was not close to an integer.
class IntegralityViolation : public Error {
public:
  using Error::Error;
};

/// Both branches of a search step fell below threshold.
class BranchFailure : public Error {
public:
  using Error::Error;
};

/// Tracked heights broke the height difference constraint.
class InvariantFailure : public Error {
public:
  using Error::Error;
};

}  // namespace mpsim
