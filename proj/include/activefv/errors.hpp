#pragma once

#include <stdexcept>
#include <string>

namespace activefv {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid grid, parameter or refinement configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violating a precondition (negative initial data, bad p, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// A linear or nonlinear solve that did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// Snapshot / CSV / config file problems.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace activefv
