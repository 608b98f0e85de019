#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmrm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller violated an API precondition (wrong parameter layout, wrong model kind).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Likelihood or mean evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& subject_id, int visit, const std::string& what)
      : Error(what + " (subject " + subject_id + ", visit " + std::to_string(visit) + ")"),
        subject_id_(subject_id),
        visit_(visit) {}
  const std::string& subject_id() const { return subject_id_; }
  int visit() const { return visit_; }

 private:
  std::string subject_id_;
  int visit_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class SingularInformationError : public Error {
 public:
  SingularInformationError(const std::string& direction, const std::string& what)
      : Error(what), direction_(direction) {}
  // Name of the parameter dominating the null direction.
  const std::string& direction() const { return direction_; }

 private:
  std::string direction_;
};

class OptimizerFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmrm
