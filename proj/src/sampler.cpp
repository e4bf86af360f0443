#include "srrl/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace srrl {

Vec cfg_noise(const DenoiserParams& params, const NoiseSchedule& schedule, const Vec& x,
              const Condition& c, int t, double lambda) {
  if (c.is_null()) throw std::invalid_argument("cfg_noise expects a class condition");
  Vec eps_c = predict_noise(params, x, c, t, schedule.num_steps);
  const Vec eps_null = predict_noise(params, x, Condition::null_token(), t, schedule.num_steps);
  for (std::size_t i = 0; i < eps_c.size(); ++i) {
    eps_c[i] += lambda * (eps_c[i] - eps_null[i]);
  }
  return eps_c;
}

double gaussian_log_density(const Vec& x, const Vec& mean, double sigma) {
  const double d = static_cast<double>(x.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - mean[i];
    sq += r * r;
  }
  return -0.5 * d * std::log(2.0 * M_PI * sigma * sigma) - sq / (2.0 * sigma * sigma);
}

DdimStepResult ddim_step(const DenoiserParams& params, const NoiseSchedule& schedule,
                         const Vec& x_t, const Condition& c, int t, double lambda,
                         double eta, const Vec& noise) {
  if (t < 1 || t > schedule.num_steps) throw std::invalid_argument("timestep out of range");
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must lie in [0, 1]");
  if (noise.size() != x_t.size()) throw std::invalid_argument("noise dimension mismatch");

  const double ab_t = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const Vec eps = cfg_noise(params, schedule, x_t, c, t, lambda);

  const double sigma =
      eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_prev);
  const double dir_sq = 1.0 - ab_prev - sigma * sigma;
  if (dir_sq < -1e-12) throw std::domain_error("negative direction coefficient");
  const double dir = std::sqrt(std::max(dir_sq, 0.0));

  const double sqrt_ab_t = std::sqrt(ab_t);
  const double sqrt_ab_prev = std::sqrt(ab_prev);
  const double sqrt_one_minus_ab_t = std::sqrt(1.0 - ab_t);

  DdimStepResult res;
  res.sigma = sigma;
  res.x_prev.resize(x_t.size());
  Vec mean(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double x0_hat = (x_t[i] - sqrt_one_minus_ab_t * eps[i]) / sqrt_ab_t;
    mean[i] = sqrt_ab_prev * x0_hat + dir * eps[i];
    res.x_prev[i] = mean[i] + sigma * noise[i];
  }
  if (sigma > 0.0) {
    res.log_prob = gaussian_log_density(res.x_prev, mean, sigma);
  }
  return res;
}

RoundTrajectory sample_round(const DenoiserParams& params, const NoiseSchedule& schedule,
                             const Vec& x_T, const Condition& c, double lambda, double eta,
                             RngStream& rng, int round_index) {
  if (!all_finite(x_T)) throw std::invalid_argument("non-finite start state");

  RoundTrajectory traj;
  traj.round_index = round_index;
  traj.condition = c;
  traj.lambda = lambda;
  traj.steps.reserve(static_cast<std::size_t>(schedule.num_steps));

  Vec x = x_T;
  for (int t = schedule.num_steps; t >= 1; --t) {
    const Vec noise = rng.gaussian_vec(params.data_dim);
    DdimStepResult step = ddim_step(params, schedule, x, c, t, lambda, eta, noise);
    TrajectoryStep rec;
    rec.t = t;
    rec.state_before = x;
    rec.state_after = step.x_prev;
    rec.log_prob_old = step.log_prob;
    rec.sigma = step.sigma;
    traj.steps.push_back(std::move(rec));
    x = traj.steps.back().state_after;
  }
  traj.terminal = x;
  return traj;
}

Vec ddim_invert_step(const DenoiserParams& params, const NoiseSchedule& schedule,
                     const Vec& x_prev, const Condition& c, int t, double lambda) {
  if (t < 1 || t > schedule.num_steps) throw std::invalid_argument("timestep out of range");

  const double ab_t = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const Vec eps = cfg_noise(params, schedule, x_prev, c, t, lambda);

  const double scale = std::sqrt(ab_t / ab_prev);
  const double coef = std::sqrt(1.0 - ab_t) - std::sqrt(ab_t * (1.0 - ab_prev) / ab_prev);

  Vec out(x_prev.size());
  for (std::size_t i = 0; i < x_prev.size(); ++i) out[i] = scale * x_prev[i] + coef * eps[i];
  if (!all_finite(out)) throw std::domain_error("inversion produced non-finite state");
  return out;
}

Vec condition_guided_forward(const DenoiserParams& params, const NoiseSchedule& schedule,
                             const Vec& x0, const Condition& c, double lambda_forward) {
  if (!all_finite(x0)) throw std::invalid_argument("non-finite input state");
  Vec x = x0;
  for (int t = 1; t <= schedule.num_steps; ++t) {
    x = ddim_invert_step(params, schedule, x, c, t, lambda_forward);
  }
  return x;
}

double guidance_gap_diagnostic(const DenoiserParams& params, const NoiseSchedule& schedule,
                               const Vec& x0, const Condition& c, double lambda_forward,
                               double lambda_denoise) {
  const Vec a = condition_guided_forward(params, schedule, x0, c, lambda_forward);
  const Vec b = condition_guided_forward(params, schedule, x0, c, lambda_denoise);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    sq += r * r;
  }
  return sq;
}

}  // namespace srrl
