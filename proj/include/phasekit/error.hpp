#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace phasekit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundParameter : public Error {
 public:
  explicit UnboundParameter(const std::string& name)
      : Error("unbound parameter '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class DomainViolation : public Error {
 public:
  using Error::Error;
};

class OrderExceeded : public Error {
 public:
  using Error::Error;
};

class SupportViolation : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SingularImplicit : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class NameCollision : public Error {
 public:
  using Error::Error;
};

class StepHypothesisViolation : public Error {
 public:
  using Error::Error;
};

// raised when an H-jet has nonzero low-order coefficients, i.e. a wrong t0
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ExprParseError : public Error {
 public:
  ExprParseError(const std::string& msg, int line, int column)
      : Error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> errors)
      : Error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s = "invalid config";
    for (const auto& x : e) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> errors_;
};

}  // namespace phasekit
