#include "p2ot/errors.hpp"

namespace p2ot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig:
      return "invalid-config";
    case ErrorKind::kInvalidInput:
      return "invalid-input";
    case ErrorKind::kNumericUnderflow:
      return "numeric-underflow";
    case ErrorKind::kDivergence:
      return "divergence";
    case ErrorKind::kOracleFailure:
      return "oracle-failure";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

DivergenceError::DivergenceError(std::size_t iteration, const std::string& message)
    : Error(ErrorKind::kDivergence,
            message + " (iteration " + std::to_string(iteration) + ")"),
      iteration_(iteration) {}

void throw_invalid_config(const std::string& message) {
  throw Error(ErrorKind::kInvalidConfig, message);
}

void throw_invalid_input(const std::string& message) {
  throw Error(ErrorKind::kInvalidInput, message);
}

}  // namespace p2ot
