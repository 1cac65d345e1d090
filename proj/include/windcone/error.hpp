#pragma once

#include <stdexcept>
#include <string>

namespace windcone {

enum class ErrorCode {
  numerical_failure,
  boundary_proximity,
  out_of_domain,
  empty_indicatrix,
  degenerate_direction,
  stiffness,
  insufficient_horizon,
  inapplicable,
  configuration,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, double residual = 0.0)
      : std::runtime_error(message), code_(code), residual_(residual) {}

  ErrorCode code() const { return code_; }
  double residual() const { return residual_; }

 private:
  ErrorCode code_;
  double residual_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::boundary_proximity: return "boundary_proximity";
    case ErrorCode::out_of_domain: return "out_of_domain";
    case ErrorCode::empty_indicatrix: return "empty_indicatrix";
    case ErrorCode::degenerate_direction: return "degenerate_direction";
    case ErrorCode::stiffness: return "stiffness";
    case ErrorCode::insufficient_horizon: return "insufficient_horizon";
    case ErrorCode::inapplicable: return "inapplicable";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace windcone
