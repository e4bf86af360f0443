#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "srrl/parallel.hpp"
#include "srrl/rl.hpp"

namespace srrl {

// A chain of reflection rounds. rounds[j] is the j-th denoising pass;
// renoise_inputs[j] is the inversion output feeding round j+1, so
// rounds.size() == renoise_inputs.size() + 1 and round j+1 starts exactly at
// renoise_inputs[j].
struct ReflectionChain {
  std::vector<RoundTrajectory> rounds;
  std::vector<Vec> renoise_inputs;
  Condition condition = Condition::null_token();

  const Vec& terminal() const { return rounds.back().terminal; }
};

struct TrainConfig {
  int reflection_rounds = 10;  // K
  int samples_per_batch = 32;  // G
  int epochs_per_round = 2;    // E
  GuidanceConfig guidance;
  double eta_final_round = 1.0;
  double clip_eps = 0.2;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double weight_decay = 1e-4;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::vector<int> condition_ids;
  ExecMode exec_mode = ExecMode::parallel;
};

// Throws std::invalid_argument unless K >= 1, G >= 2, E >= 1 and the
// schedule has T >= 2 (a single-step schedule has no stochastic step to
// optimize).
void validate(const TrainConfig& config, const NoiseSchedule& schedule);

struct MetricsRow {
  int round = 0;
  int epoch = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double max_reward = 0.0;
  double min_reward = 0.0;
  double objective = 0.0;
  double clip_fraction = 0.0;
  bool skipped = false;
};
using MetricsLog = std::vector<MetricsRow>;

using RewardFn = std::function<double(const Vec&, const Condition&)>;

// Draws a fresh Gaussian start, runs `rounds` context cycles (deterministic
// denoise at lambda_denoise, inversion at lambda_forward), then one recorded
// pass at eta_final with per-step log densities. rounds == 0 reduces to a
// single recorded pass.
ReflectionChain build_chain(const DenoiserParams& params, const NoiseSchedule& schedule,
                            const Condition& c, int rounds, const GuidanceConfig& guidance,
                            double eta_final, RngStream& rng);

struct TrainResult {
  DenoiserParams params;
  MetricsLog metrics;
};

// Reflective policy optimization. For every round depth k = 0..K-1 and epoch
// e = 0..E-1: pick a condition, build G chains at depth k, score their
// terminals, normalize advantages over the group, select the max/min pair,
// and apply one ascent step on the summed clipped surrogate of the two
// selected recorded passes. Degenerate groups skip the update and are logged
// with the skipped flag. on_row, when set, observes every metrics row as it
// is produced.
TrainResult train(const TrainConfig& config, const NoiseSchedule& schedule,
                  const DenoiserParams& pretrained, const RewardFn& reward,
                  const std::function<void(const MetricsRow&)>& on_row = {});

// Inference: `rounds` cycles of deterministic denoising at lambda_inference
// and inversion at lambda_forward, then a final denoise. Deterministic given
// the start state.
Vec reflect_sample(const DenoiserParams& params, const NoiseSchedule& schedule,
                   const Vec& x_T, const Condition& c, int rounds,
                   const GuidanceConfig& guidance);

// Mean oracle reward of reflect_sample outputs per round depth 0..max_rounds,
// averaged over n_samples fresh starts per condition. The same starts are
// reused across depths so the per-round comparison is paired.
std::vector<double> evaluate_rounds(const DenoiserParams& params, const NoiseSchedule& schedule,
                                    const std::vector<int>& condition_ids, int max_rounds,
                                    const GuidanceConfig& guidance, const RewardFn& reward,
                                    int n_samples, std::uint64_t seed,
                                    ExecMode mode = ExecMode::parallel);

}  // namespace srrl
