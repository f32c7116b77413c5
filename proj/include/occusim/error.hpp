#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace occusim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A serialized file is truncated, has a wrong magic, or an unknown version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Shapes disagree with the network configuration.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or diverging values during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace occusim
