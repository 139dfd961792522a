#pragma once

#include <stdexcept>
#include <string>

namespace cutoff {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that violates a structural precondition: sort mismatch, unknown
// symbol, uncovered free variable, mixed tags and so on.
class IllFormed : public Error {
 public:
  using Error::Error;
};

// A user-facing problem in a spec file, with a source position when known.
class Diagnostic : public Error {
 public:
  Diagnostic(const std::string& message, int line = 0, int column = 0)
      : Error(format(message, line, column)), message_(message), line_(line), column_(column) {}

  const std::string& message() const { return message_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& message, int line, int column) {
    if (line <= 0) return message;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }

  std::string message_;
  int line_;
  int column_;
};

// Removing an element would leave a sort with an empty domain.
class DomainCollapse : public Error {
 public:
  using Error::Error;
};

// Enumeration refused because the estimated search space is too large.
class GuardrailExceeded : public Error {
 public:
  using Error::Error;
};

// Solver missing, crashed, or produced output that is not SMT-LIB.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

// A decoded countermodel failed re-validation against the obligation.
class DecodeIntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace cutoff
