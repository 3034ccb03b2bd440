#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pscape {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse"; }

private:
  std::size_t line_;
};

/// Invalid argument or violated precondition.
class ArgumentError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

/// Operand shapes do not agree; the message names the operation.
class ShapeError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Graph-level failure, e.g. a k-NN build that is not connected.
class GraphError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "graph"; }
};

/// Numerical failure: solver non-convergence, NaN loss, collapsed latents.
class NumericError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

} // namespace pscape
