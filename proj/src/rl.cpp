#include "srrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srrl {

namespace {

constexpr double kDegenerateStd = 1e-8;

double mixture_log_density(const std::vector<GaussianMode>& modes, const Vec& x) {
  if (modes.empty()) throw std::invalid_argument("condition has no registered reward targets");
  double weight_sum = 0.0;
  for (const auto& m : modes) weight_sum += m.weight;

  const double d = static_cast<double>(x.size());
  const double log_norm = -0.5 * d * std::log(2.0 * M_PI);

  // log-sum-exp over modes
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(modes.size());
  for (const auto& m : modes) {
    if (m.mean.size() != x.size()) throw std::invalid_argument("mode dimension mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - m.mean[i];
      sq += r * r;
    }
    const double term = std::log(m.weight / weight_sum) + log_norm - 0.5 * sq;
    terms.push_back(term);
    max_term = std::max(max_term, term);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

// Density of one stored transition recomputed under the given params, with
// hooks to push d(logp)/d(params) * weight into a gradient accumulator.
class StepEval {
 public:
  StepEval(const DenoiserParams& params, const NoiseSchedule& schedule,
           const TrajectoryStep& step, const Condition& c, double lambda)
      : params_(params), lambda_(lambda) {
    const double ab_t = schedule.alpha_bar(step.t);
    const double ab_prev = schedule.alpha_bar(step.t - 1);
    const double sigma = step.sigma;

    predict_noise_cached(params, step.state_before, c, step.t, schedule.num_steps, cache_c_);
    predict_noise_cached(params, step.state_before, Condition::null_token(), step.t,
                         schedule.num_steps, cache_null_);

    // same operation order as the sampling step, so unchanged parameters
    // reproduce the stored density bit for bit
    const double dir = std::sqrt(1.0 - ab_prev - sigma * sigma);
    const double sqrt_ab_t = std::sqrt(ab_t);
    const double sqrt_ab_prev = std::sqrt(ab_prev);
    const double sqrt_one_minus_ab_t = std::sqrt(1.0 - ab_t);
    eps_coef_ = dir - std::sqrt(ab_prev * (1.0 - ab_t) / ab_t);

    const std::size_t d = step.state_before.size();
    mean_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double guided = cache_c_.out[i] + lambda * (cache_c_.out[i] - cache_null_.out[i]);
      const double x0_hat = (step.state_before[i] - sqrt_one_minus_ab_t * guided) / sqrt_ab_t;
      mean_[i] = sqrt_ab_prev * x0_hat + dir * guided;
    }
    log_prob_ = gaussian_log_density(step.state_after, mean_, sigma);

    // d(logp)/d(mean) = (x_after - mean) / sigma^2
    mean_grad_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      mean_grad_[i] = (step.state_after[i] - mean_[i]) / (sigma * sigma);
    }
  }

  double log_prob() const { return log_prob_; }

  // grads += weight * d(logp)/d(trainable)
  void add_gradient(double weight, ParamGradients& grads) const {
    const std::size_t d = mean_grad_.size();
    Vec upstream_c(d), upstream_null(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double u = weight * eps_coef_ * mean_grad_[i];
      upstream_c[i] = (1.0 + lambda_) * u;
      upstream_null[i] = -lambda_ * u;
    }
    accumulate_backprop(params_, cache_c_, upstream_c, grads);
    accumulate_backprop(params_, cache_null_, upstream_null, grads);
  }

 private:
  const DenoiserParams& params_;
  double lambda_;
  double eps_coef_ = 0.0;
  Vec mean_;
  Vec mean_grad_;
  double log_prob_ = 0.0;
  ForwardCache cache_c_;
  ForwardCache cache_null_;
};

PpoResult ppo_eval(const RoundTrajectory& traj, const DenoiserParams& params_new,
                   const NoiseSchedule& schedule, double advantage, double clip_eps,
                   ParamGradients* grads) {
  if (clip_eps <= 0.0 || clip_eps >= 1.0) {
    throw std::invalid_argument("clip_eps must lie in (0, 1)");
  }

  PpoResult res;
  int counted = 0;
  int clipped = 0;
  for (const TrajectoryStep& step : traj.steps) {
    if (!step.log_prob_old.has_value()) continue;
    ++counted;

    StepEval eval(params_new, schedule, step, traj.condition, traj.lambda);
    const double ratio = std::exp(eval.log_prob() - *step.log_prob_old);
    const double unclipped = ratio * advantage;
    const double clamped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if (clamped < unclipped) {
      res.objective += clamped;
      ++clipped;  // binding clip: constant in the parameters, no gradient
    } else {
      res.objective += unclipped;
      if (grads != nullptr) eval.add_gradient(advantage * ratio, *grads);
    }
  }
  if (counted == 0) throw std::invalid_argument("trajectory has no stochastic steps");
  res.clip_fraction = static_cast<double>(clipped) / counted;
  return res;
}

}  // namespace

double evaluate_reward(const RewardOracle& oracle, const Vec& x, const Condition& c) {
  if (const auto* modes = std::get_if<ModeAffinityReward>(&oracle)) {
    const int id = c.class_id();
    if (id >= static_cast<int>(modes->targets_per_condition.size())) {
      throw std::invalid_argument("condition has no registered reward targets");
    }
    return mixture_log_density(modes->targets_per_condition[static_cast<std::size_t>(id)], x);
  }
  const auto& rel = std::get<RelationalConstraintReward>(oracle);
  const auto a = static_cast<std::size_t>(rel.index_a);
  const auto b = static_cast<std::size_t>(rel.index_b);
  if (a >= x.size() || b >= x.size()) throw std::invalid_argument("constraint index out of range");
  const double z = rel.sharpness * (x[a] - x[b] - rel.margin);
  return 1.0 / (1.0 + std::exp(-z));
}

RewardGroup normalize_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) throw std::invalid_argument("reward group needs at least 2 samples");

  RewardGroup group;
  group.rewards = rewards;
  group.advantages.assign(rewards.size(), 0.0);

  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());

  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / static_cast<double>(rewards.size()));

  if (std_dev < kDegenerateStd) {
    group.degenerate = true;
    return group;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    group.advantages[i] = (rewards[i] - mean) / std_dev;
  }
  return group;
}

std::optional<std::pair<int, int>> contrastive_select(const RewardGroup& group) {
  if (group.degenerate) return std::nullopt;
  int i_max = 0;
  int i_min = 0;
  for (int i = 1; i < static_cast<int>(group.rewards.size()); ++i) {
    if (group.rewards[static_cast<std::size_t>(i)] > group.rewards[static_cast<std::size_t>(i_max)]) i_max = i;
    if (group.rewards[static_cast<std::size_t>(i)] < group.rewards[static_cast<std::size_t>(i_min)]) i_min = i;
  }
  return std::make_pair(i_max, i_min);
}

PpoResult ppo_objective(const RoundTrajectory& traj, const DenoiserParams& params_new,
                        const NoiseSchedule& schedule, double advantage, double clip_eps) {
  return ppo_eval(traj, params_new, schedule, advantage, clip_eps, nullptr);
}

ParamGradients ppo_gradient(const RoundTrajectory& traj, const DenoiserParams& params_new,
                            const NoiseSchedule& schedule, double advantage,
                            double clip_eps) {
  ParamGradients grads(trainable_size(params_new), 0.0);
  ppo_eval(traj, params_new, schedule, advantage, clip_eps, &grads);
  return grads;
}

ParamGradients reinforce_gradient(const RoundTrajectory& traj, const DenoiserParams& params,
                                  const NoiseSchedule& schedule, double reward) {
  ParamGradients grads(trainable_size(params), 0.0);
  int counted = 0;
  for (const TrajectoryStep& step : traj.steps) {
    if (!step.log_prob_old.has_value()) continue;
    ++counted;
    StepEval eval(params, schedule, step, traj.condition, traj.lambda);
    eval.add_gradient(reward, grads);
  }
  if (counted == 0) throw std::invalid_argument("trajectory has no stochastic steps");
  return grads;
}

}  // namespace srrl
