#include "mftrade/errors.hpp"

#include <sstream>

namespace mftrade {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter_domain: return "parameter_domain";
    case ErrorKind::out_of_regime: return "out_of_regime";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::non_stationary_fit: return "non_stationary_fit";
    case ErrorKind::numerical_failure: return "numerical_failure";
    case ErrorKind::insufficient_horizon: return "insufficient_horizon";
    case ErrorKind::stability: return "stability";
    case ErrorKind::input: return "input";
    case ErrorKind::unphysical_calibration: return "unphysical_calibration";
    case ErrorKind::unreachable_target: return "unreachable_target";
    case ErrorKind::boundary_hit: return "boundary_hit";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::input: return 2;
    case ErrorKind::parameter_domain:
    case ErrorKind::out_of_regime:
    case ErrorKind::degenerate:
    case ErrorKind::stability:
    case ErrorKind::unphysical_calibration:
    case ErrorKind::unreachable_target: return 3;
    case ErrorKind::numerical_failure:
    case ErrorKind::non_stationary_fit:
    case ErrorKind::insufficient_horizon:
    case ErrorKind::boundary_hit: return 4;
    case ErrorKind::io: return 5;
  }
  return 1;
}

namespace {

std::string phi_message(double phi) {
  std::ostringstream os;
  os << "AR(1) fit is not stationary: phi_hat = " << phi << " (must lie in (0, 1))";
  return os.str();
}

std::string tolerance_message(const std::string& what, double tol) {
  std::ostringstream os;
  os << what << ": quadrature did not converge (achieved relative tolerance " << tol << ")";
  return os.str();
}

}  // namespace

NonStationaryFitError::NonStationaryFitError(double phi_hat)
    : Error(ErrorKind::non_stationary_fit, "phi_hat", phi_message(phi_hat)), phi_hat_(phi_hat) {}

NumericalFailureError::NumericalFailureError(const std::string& what, double achieved_tolerance)
    : Error(ErrorKind::numerical_failure, what, tolerance_message(what, achieved_tolerance)),
      achieved_(achieved_tolerance) {}

namespace detail {

void fail(ErrorKind kind, std::string field, const std::string& message) {
  throw Error(kind, std::move(field), message);
}

}  // namespace detail
}  // namespace mftrade
