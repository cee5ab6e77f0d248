#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mftrade {

enum class ErrorKind {
  parameter_domain,
  out_of_regime,
  degenerate,
  non_stationary_fit,
  numerical_failure,
  insufficient_horizon,
  stability,
  input,
  unphysical_calibration,
  unreachable_target,
  boundary_hit,
  parse,
  io,
};

std::string_view to_string(ErrorKind kind);

// Distinct process exit code per error family; 0 is success and 1 is usage.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Name of the offending parameter or config field, may be empty.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

// AR(1) fit produced a coefficient outside (0, 1).
class NonStationaryFitError : public Error {
 public:
  explicit NonStationaryFitError(double phi_hat);
  double phi_hat() const noexcept { return phi_hat_; }

 private:
  double phi_hat_;
};

class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& what, double achieved_tolerance);
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

namespace detail {

[[noreturn]] void fail(ErrorKind kind, std::string field, const std::string& message);

inline void require(bool ok, ErrorKind kind, const char* field, const std::string& message) {
  if (!ok) fail(kind, field, message);
}

}  // namespace detail
}  // namespace mftrade
