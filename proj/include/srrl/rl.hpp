#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "srrl/sampler.hpp"

namespace srrl {

// Analytic reward oracles standing in for learned reward models.

struct GaussianMode {
  Vec mean;
  double weight = 1.0;
};

// Reward = log of the condition's Gaussian-mixture density at x (unit
// covariance per mode, weights normalized to sum to one).
struct ModeAffinityReward {
  std::vector<std::vector<GaussianMode>> targets_per_condition;
};

// Reward = logistic(sharpness * (x[index_a] - x[index_b] - margin)).
struct RelationalConstraintReward {
  int index_a = 0;
  int index_b = 1;
  double margin = 0.0;
  double sharpness = 1.0;
};

using RewardOracle = std::variant<ModeAffinityReward, RelationalConstraintReward>;

double evaluate_reward(const RewardOracle& oracle, const Vec& x, const Condition& c);

// Group-normalized advantages with the population standard deviation.
// Groups whose reward spread falls below 1e-8 are degenerate: advantages are
// all zero and the caller skips the update.
struct RewardGroup {
  std::vector<double> rewards;
  std::vector<double> advantages;
  bool degenerate = false;
};

RewardGroup normalize_advantages(const std::vector<double>& rewards);

// Indices of the maximum- and minimum-reward samples, ties broken by the
// lowest index. nullopt for degenerate groups (no update). Non-degenerate
// groups guarantee i_max != i_min.
std::optional<std::pair<int, int>> contrastive_select(const RewardGroup& group);

struct PpoResult {
  double objective = 0.0;
  double clip_fraction = 0.0;
};

// Clipped surrogate over the trajectory's stochastic steps:
//   sum_t min(rho_t A, clip(rho_t, 1 - eps, 1 + eps) A),
// with rho_t the ratio of the current step density to the stored
// sampling-time density. Steps without a stored density are excluded;
// a trajectory with none at all is an error.
PpoResult ppo_objective(const RoundTrajectory& traj, const DenoiserParams& params_new,
                        const NoiseSchedule& schedule, double advantage, double clip_eps);

// Exact gradient of ppo_objective w.r.t. the trainable parameters of
// params_new. Steps where the clipped branch is active contribute zero.
ParamGradients ppo_gradient(const RoundTrajectory& traj, const DenoiserParams& params_new,
                            const NoiseSchedule& schedule, double advantage,
                            double clip_eps);

// Plain score-function gradient sum_t grad log p(x_{t-1} | x_t, c) * reward
// over the stochastic steps, evaluated at the given params. Coincides with
// ppo_gradient at ratio 1 when advantage == reward.
ParamGradients reinforce_gradient(const RoundTrajectory& traj, const DenoiserParams& params,
                                  const NoiseSchedule& schedule, double reward);

}  // namespace srrl
