#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace missoc {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidKnotsError : public Error {
 public:
  using Error::Error;
};

class DegenerateDomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class SizeMismatchError : public Error {
 public:
  using Error::Error;
};

/// A covariate value outside the fitted knot range.
class OutOfDomainError : public Error {
 public:
  OutOfDomainError(std::string covariate, double value, double lo, double hi);

  const std::string& covariate() const { return covariate_; }
  double value() const { return value_; }

 private:
  std::string covariate_;
  double value_;
};

class IllPosedFitError : public Error {
 public:
  IllPosedFitError(const std::string& what, double smallest_pivot)
      : Error(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

class InvalidIntervalError : public Error {
 public:
  using Error::Error;
};

class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// The shape-constrained program has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped at its iteration cap. The best iterate found
/// so far travels with the error (empty when none exists).
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what, std::vector<double> best = {})
      : Error(what), best_(std::move(best)) {}
  const std::vector<double>& best_iterate() const { return best_; }

 private:
  std::vector<double> best_;
};

class DomainMismatchError : public Error {
 public:
  using Error::Error;
};

class UnsupportedScopeError : public Error {
 public:
  using Error::Error;
};

/// Parse failure with 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside one stage of the end-to-end driver.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace missoc
