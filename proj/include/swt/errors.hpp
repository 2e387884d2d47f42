// errors.hpp — exception types raised by the symbolic engine, the numeric oracle and the model loader.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A polynomial that is identically zero was used as a denominator.
class ZeroDenominator : public Error {
 public:
  using Error::Error;
};

// Numeric evaluation hit a denominator factor below the singularity threshold.
class EvalSingular : public Error {
 public:
  using Error::Error;
};

// A channel selected for elimination has an identically vanishing denominator.
class Resonance : public Error {
 public:
  using Error::Error;
};

// The generator denominator vanishes on specific number states.
class FockSingular : public Error {
 public:
  FockSingular(const std::string& what, std::vector<std::vector<int>> levels)
      : Error(what), levels_(std::move(levels)) {}
  const std::vector<std::vector<int>>& levels() const noexcept { return levels_; }

 private:
  std::vector<std::vector<int>> levels_;
};

class NotDiagonal : public Error {
 public:
  using Error::Error;
};

class StaticComponent : public Error {
 public:
  using Error::Error;
};

class NotTwoLevel : public Error {
 public:
  using Error::Error;
};

class NotCoRotating : public Error {
 public:
  using Error::Error;
};

class AssignmentAmbiguous : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  DegenerateSpectrum(const std::string& what, std::vector<std::pair<int, int>> pairs)
      : Error(what), pairs_(std::move(pairs)) {}
  const std::vector<std::pair<int, int>>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

// Caller violated an operation's precondition (mismatched shapes, missing fundamental, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Source-located errors from the model loader.
class LocatedError : public Error {
 public:
  LocatedError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + what : what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ParseError : public LocatedError {
 public:
  using LocatedError::LocatedError;
};

class ValidationError : public LocatedError {
 public:
  using LocatedError::LocatedError;
};

}  // namespace swt
