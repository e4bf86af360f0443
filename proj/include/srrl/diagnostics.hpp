#pragma once

#include <string>
#include <vector>

#include "srrl/sampler.hpp"

namespace srrl {

// Deliberate perturbation of one check's measured value, for exercising the
// failure path end to end.
enum class FaultInjection { none, gradient, roundtrip, gap, density };

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Numerical health checks on the given model and schedule: analytic-vs-
// finite-difference gradients, inversion round trips (constant-prediction
// exact, zero-net telescoped), guidance-gap identities and a monotone sweep,
// and the stochastic-step density normalization. Deterministic.
std::vector<CheckResult> run_diagnostics(const DenoiserParams& params,
                                         const NoiseSchedule& schedule,
                                         FaultInjection fault = FaultInjection::none);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace srrl
