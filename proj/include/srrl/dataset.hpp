#pragma once

#include <vector>

#include "srrl/config.hpp"
#include "srrl/denoiser.hpp"

namespace srrl {

// Toy training data. Modes task: condition drawn uniformly, sample from that
// condition's Gaussian mixture (unit covariance). Relational task: condition
// drawn uniformly, sample from a standard normal — the constraint lives only
// in the reward.
std::vector<Example> generate_dataset(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace srrl
