#pragma once

#include <cstddef>
#include <string_view>

namespace p2ot {

enum class RampKind { kSigmoid, kLinear, kFixed };

std::string_view to_string(RampKind kind);
RampKind parse_ramp(std::string_view name);

/// Policy for the selected-mass fraction rho over T steps.
struct RampSchedule {
  RampKind kind = RampKind::kSigmoid;
  double rho0 = 0.1;
  std::size_t total_steps = 1;

  void validate() const;
};

/// sigmoid: rho0 + (1 - rho0) exp(-5 (1 - t/T)^2)
/// linear:  rho0 + (1 - rho0) t/T
/// fixed:   rho0
/// The result is clamped to [1e-3, 1]. Throws invalid-input for t > T.
double rho_at(const RampSchedule& schedule, std::size_t t);

}  // namespace p2ot
