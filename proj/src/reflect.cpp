#include "srrl/reflect.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace srrl {

void validate(const TrainConfig& config, const NoiseSchedule& schedule) {
  if (config.reflection_rounds < 1) throw std::invalid_argument("need at least one reflection round");
  if (config.samples_per_batch < 2) throw std::invalid_argument("need at least two samples per batch");
  if (config.epochs_per_round < 1) throw std::invalid_argument("need at least one epoch per round");
  if (schedule.num_steps < 2) throw std::invalid_argument("need at least two denoising steps");
  if (config.condition_ids.empty()) throw std::invalid_argument("no conditions configured");
}

ReflectionChain build_chain(const DenoiserParams& params, const NoiseSchedule& schedule,
                            const Condition& c, int rounds, const GuidanceConfig& guidance,
                            double eta_final, RngStream& rng) {
  if (rounds < 0) throw std::invalid_argument("round count must be non-negative");

  ReflectionChain chain;
  chain.condition = c;
  chain.rounds.reserve(static_cast<std::size_t>(rounds) + 1);
  chain.renoise_inputs.reserve(static_cast<std::size_t>(rounds));

  Vec x_T = rng.gaussian_vec(params.data_dim);
  for (int j = 0; j < rounds; ++j) {
    RoundTrajectory round = sample_round(params, schedule, x_T, c,
                                         guidance.lambda_denoise, 0.0, rng, j);
    x_T = condition_guided_forward(params, schedule, round.terminal, c,
                                   guidance.lambda_forward);
    chain.rounds.push_back(std::move(round));
    chain.renoise_inputs.push_back(x_T);
  }
  chain.rounds.push_back(sample_round(params, schedule, x_T, c, guidance.lambda_denoise,
                                      eta_final, rng, rounds));

  // stitching invariant: every round starts where the previous inversion ended
  for (std::size_t j = 0; j + 1 < chain.rounds.size(); ++j) {
    assert(chain.rounds[j + 1].steps.front().state_before == chain.renoise_inputs[j]);
  }
  return chain;
}

namespace {

struct GroupStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double max = 0.0;
  double min = 0.0;
};

GroupStats reward_stats(const std::vector<double>& rewards) {
  GroupStats s;
  s.max = *std::max_element(rewards.begin(), rewards.end());
  s.min = *std::min_element(rewards.begin(), rewards.end());
  for (double r : rewards) s.mean += r;
  s.mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - s.mean) * (r - s.mean);
  s.std_dev = std::sqrt(var / static_cast<double>(rewards.size()));
  return s;
}

}  // namespace

TrainResult train(const TrainConfig& config, const NoiseSchedule& schedule,
                  const DenoiserParams& pretrained, const RewardFn& reward,
                  const std::function<void(const MetricsRow&)>& on_row) {
  validate(config, schedule);

  TrainResult result;
  result.params = pretrained;
  OptimizerState opt = make_optimizer(result.params, config.learning_rate, config.adam_beta1,
                                      config.adam_beta2, config.weight_decay,
                                      config.adam_epsilon);

  const int group = config.samples_per_batch;
  std::vector<ReflectionChain> chains(static_cast<std::size_t>(group));
  std::vector<double> rewards(static_cast<std::size_t>(group));

  for (int k = 0; k < config.reflection_rounds; ++k) {
    for (int e = 0; e < config.epochs_per_round; ++e) {
      RngStream cond_rng(derive_seed(config.seed, {stream::condition,
                                                   static_cast<std::uint64_t>(k),
                                                   static_cast<std::uint64_t>(e)}));
      const int cond_id = config.condition_ids[static_cast<std::size_t>(
          cond_rng.uniform_int(static_cast<int>(config.condition_ids.size())))];
      const Condition c = Condition::cls(cond_id);

      // group sampling: one chain per independent stream, reduced in index order
      const DenoiserParams& sampling_params = result.params;
      for_each_index(group, config.exec_mode, [&](int i) {
        RngStream rng(derive_seed(config.seed, {stream::chain,
                                                static_cast<std::uint64_t>(k),
                                                static_cast<std::uint64_t>(e),
                                                static_cast<std::uint64_t>(i)}));
        chains[static_cast<std::size_t>(i)] =
            build_chain(sampling_params, schedule, c, k, config.guidance,
                        config.eta_final_round, rng);
        rewards[static_cast<std::size_t>(i)] =
            reward(chains[static_cast<std::size_t>(i)].terminal(), c);
      });

      const GroupStats stats = reward_stats(rewards);
      MetricsRow row;
      row.round = k;
      row.epoch = e;
      row.mean_reward = stats.mean;
      row.std_reward = stats.std_dev;
      row.max_reward = stats.max;
      row.min_reward = stats.min;

      const RewardGroup adv = normalize_advantages(rewards);
      const auto selected = contrastive_select(adv);
      if (!selected.has_value()) {
        row.skipped = true;
      } else {
        const auto [i_max, i_min] = *selected;
        ParamGradients grads(trainable_size(result.params), 0.0);
        double objective = 0.0;
        double clip_fraction = 0.0;
        for (int idx : {i_max, i_min}) {
          const RoundTrajectory& recorded = chains[static_cast<std::size_t>(idx)].rounds.back();
          const double a = adv.advantages[static_cast<std::size_t>(idx)];
          PpoResult ppo = ppo_objective(recorded, result.params, schedule, a, config.clip_eps);
          ParamGradients g = ppo_gradient(recorded, result.params, schedule, a, config.clip_eps);
          axpy(1.0, g, grads);
          objective += ppo.objective;
          clip_fraction += 0.5 * ppo.clip_fraction;
        }
        row.objective = objective;
        row.clip_fraction = clip_fraction;
        // ascent on the surrogate
        for (auto& g : grads) g = -g;
        adam_update(result.params, opt, grads);
      }

      result.metrics.push_back(row);
      if (on_row) on_row(row);
    }
  }
  return result;
}

Vec reflect_sample(const DenoiserParams& params, const NoiseSchedule& schedule,
                   const Vec& x_T, const Condition& c, int rounds,
                   const GuidanceConfig& guidance) {
  if (rounds < 0) throw std::invalid_argument("round count must be non-negative");

  RngStream unused(0);  // eta = 0 throughout; the noise draws are inert
  Vec x = x_T;
  for (int j = 0; j < rounds; ++j) {
    const RoundTrajectory round =
        sample_round(params, schedule, x, c, guidance.lambda_inference, 0.0, unused, j);
    x = condition_guided_forward(params, schedule, round.terminal, c, guidance.lambda_forward);
  }
  return sample_round(params, schedule, x, c, guidance.lambda_inference, 0.0, unused, rounds)
      .terminal;
}

std::vector<double> evaluate_rounds(const DenoiserParams& params, const NoiseSchedule& schedule,
                                    const std::vector<int>& condition_ids, int max_rounds,
                                    const GuidanceConfig& guidance, const RewardFn& reward,
                                    int n_samples, std::uint64_t seed, ExecMode mode) {
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  if (max_rounds < 0) throw std::invalid_argument("round count must be non-negative");
  if (condition_ids.empty()) throw std::invalid_argument("no conditions configured");

  const int num_conds = static_cast<int>(condition_ids.size());
  const int jobs = num_conds * n_samples;
  // per-(condition, sample) reward column, reduced in index order afterwards
  std::vector<std::vector<double>> per_job(static_cast<std::size_t>(jobs));

  for_each_index(jobs, mode, [&](int job) {
    const int ci = job / n_samples;
    const int si = job % n_samples;
    const Condition c = Condition::cls(condition_ids[static_cast<std::size_t>(ci)]);
    RngStream rng(derive_seed(seed, {stream::eval, static_cast<std::uint64_t>(ci),
                                     static_cast<std::uint64_t>(si)}));
    RngStream inert(0);

    std::vector<double>& col = per_job[static_cast<std::size_t>(job)];
    col.resize(static_cast<std::size_t>(max_rounds) + 1);

    // one incremental pass: round k's output doubles as round k+1's input,
    // which matches calling reflect_sample per depth since every pass is
    // deterministic
    Vec x_T = rng.gaussian_vec(params.data_dim);
    for (int k = 0; k <= max_rounds; ++k) {
      const RoundTrajectory round =
          sample_round(params, schedule, x_T, c, guidance.lambda_inference, 0.0, inert, k);
      col[static_cast<std::size_t>(k)] = reward(round.terminal, c);
      if (k < max_rounds) {
        x_T = condition_guided_forward(params, schedule, round.terminal, c,
                                       guidance.lambda_forward);
      }
    }
  });

  std::vector<double> means(static_cast<std::size_t>(max_rounds) + 1, 0.0);
  for (const auto& col : per_job) {
    for (std::size_t k = 0; k < col.size(); ++k) means[k] += col[k];
  }
  for (auto& m : means) m /= static_cast<double>(jobs);
  return means;
}

}  // namespace srrl
