#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbllab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

// Violated operation precondition (bad exponent pair, guard, malformed model).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error("parse error at " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnboundIdentifier : public Error {
 public:
  explicit UnboundIdentifier(const std::string& name)
      : Error("unbound identifier '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class PowSumNotLatticeLinear : public Error {
 public:
  PowSumNotLatticeLinear() : Error("canonical form requested for an expression containing powsum") {}
};

class Infeasible : public Error {
 public:
  Infeasible() : Error("linear program is infeasible") {}
};

class Unbounded : public Error {
 public:
  Unbounded() : Error("linear program is unbounded") {}
};

// Every atom of the Pietsch grid pairs to zero with some functional where f > 0.
class DegenerateGrid : public Error {
 public:
  DegenerateGrid() : Error("atom grid is degenerate: domination LP is infeasible") {}
};

}  // namespace fbllab
