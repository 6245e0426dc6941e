#pragma once

#include <stdexcept>
#include <string>

namespace levyest {

//! Argument outside the domain of an operation (e.g. eps = 0 for an
//! infinite Levy measure).
class DomainError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//! A closed form or exact sampler does not exist for this model.
class NotAvailable : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Adaptive quadrature did not reach its tolerance.
class IntegrationFailure : public std::runtime_error
{
public:
  IntegrationFailure(const std::string& what, double estimate, double error)
    : std::runtime_error(what + " (estimate " + std::to_string(estimate) +
                         ", error " + std::to_string(error) + ")")
    , estimate_(estimate)
    , error_(error)
  {}
  double estimate() const { return estimate_; }
  double error() const { return error_; }

private:
  double estimate_;
  double error_;
};

//! No increment exceeded the threshold; the estimator is defined as 0.
class EmptySample : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Config text problem, carrying the offending line (0 if none).
class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                  : what)
    , line_(line)
  {}
  int line() const { return line_; }

private:
  int line_;
};

} // namespace levyest
