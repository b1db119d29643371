#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace p2ot {

enum class ErrorKind {
  kInvalidConfig,
  kInvalidInput,
  kNumericUnderflow,
  kDivergence,
  kOracleFailure,
};

std::string_view to_string(ErrorKind kind);

// Base of every error the library throws. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, const std::string& message);

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

[[noreturn]] void throw_invalid_config(const std::string& message);
[[noreturn]] void throw_invalid_input(const std::string& message);

}  // namespace p2ot
