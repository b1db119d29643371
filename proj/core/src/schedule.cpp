#include "p2ot/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "p2ot/errors.hpp"

namespace p2ot {
namespace {

// Keeps the real block of the column target from vanishing.
constexpr double kMinRho = 1e-3;

}  // namespace

std::string_view to_string(RampKind kind) {
  switch (kind) {
    case RampKind::kSigmoid:
      return "sigmoid";
    case RampKind::kLinear:
      return "linear";
    case RampKind::kFixed:
      return "fixed";
  }
  return "unknown";
}

RampKind parse_ramp(std::string_view name) {
  if (name == "sigmoid") return RampKind::kSigmoid;
  if (name == "linear") return RampKind::kLinear;
  if (name == "fixed") return RampKind::kFixed;
  throw_invalid_config("unknown ramp '" + std::string(name) + "'");
}

void RampSchedule::validate() const {
  if (!(rho0 >= 0.0) || rho0 >= 1.0) {
    // fixed at 1 is the plain UOT setting and is allowed
    if (!(kind == RampKind::kFixed && rho0 == 1.0)) throw_invalid_config("rho0 must lie in [0, 1)");
  }
  if (total_steps < 1) throw_invalid_config("total steps must be positive");
}

double rho_at(const RampSchedule& schedule, std::size_t t) {
  schedule.validate();
  if (t > schedule.total_steps) {
    throw_invalid_input("step " + std::to_string(t) + " exceeds total steps " +
                        std::to_string(schedule.total_steps));
  }
  const double rho0 = schedule.rho0;
  const double progress = static_cast<double>(t) / static_cast<double>(schedule.total_steps);
  double rho = rho0;
  switch (schedule.kind) {
    case RampKind::kSigmoid: {
      const double gap = 1.0 - progress;
      rho = rho0 + (1.0 - rho0) * std::exp(-5.0 * gap * gap);
      break;
    }
    case RampKind::kLinear:
      rho = rho0 + (1.0 - rho0) * progress;
      break;
    case RampKind::kFixed:
      break;
  }
  // rho0 + (1 - rho0) can round below 1; the ramp ends at exactly 1.
  if (schedule.kind != RampKind::kFixed && t == schedule.total_steps) return 1.0;
  return std::clamp(rho, kMinRho, 1.0);
}

}  // namespace p2ot
