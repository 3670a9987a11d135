#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pulse {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was not met (mismatched
/// dimensions, malformed inputs, missing bracket, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Bad user-level configuration: unknown catalog entry, malformed override,
/// unknown selection strategy.
class UsageError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// An argument lies outside the domain where the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two jumps share a time, so the path has no CJ_m representative.
class DegenerateCorrespondence : public Error {
 public:
  using Error::Error;
};

/// A mollified field was evaluated outside the box it was built on.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

/// A selection produced a value that fails the membership audit.
class SelectionError : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_time)
      : Error(what), last_time_(last_time) {}
  double last_time() const noexcept { return last_time_; }

 private:
  double last_time_;
};

/// A trajectory came back to a pulse surface it had already crossed. Under
/// the transversality and ordering hypotheses this cannot happen, so the
/// error signals that the problem violates them.
class SurfaceRevisit : public Error {
 public:
  SurfaceRevisit(const std::string& what, std::size_t surface, double time)
      : Error(what), surface_(surface), time_(time) {}
  std::size_t surface() const noexcept { return surface_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t surface_;
  double time_;
};

}  // namespace pulse
