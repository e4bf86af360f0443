#pragma once

#include <optional>
#include <vector>

#include "srrl/denoiser.hpp"
#include "srrl/rng.hpp"
#include "srrl/schedule.hpp"

namespace srrl {

// Guidance scales for the three places the guided prediction is used.
// lambda = 0 collapses to the purely conditional prediction.
struct GuidanceConfig {
  double lambda_denoise = 3.0;
  double lambda_forward = 0.5;
  double lambda_inference = 7.5;
};

// One denoising transition t -> t-1. log_prob_old is the Gaussian log
// density of state_after under the sampling-time policy; deterministic steps
// (sigma == 0) carry nullopt rather than a fake number.
struct TrajectoryStep {
  int t = 0;
  Vec state_before;  // x_t
  Vec state_after;   // x_{t-1}
  std::optional<double> log_prob_old;
  double sigma = 0.0;
};

// One full denoising pass, steps ordered t = T..1.
struct RoundTrajectory {
  int round_index = 0;
  std::vector<TrajectoryStep> steps;
  Vec terminal;  // x_0, equals steps.back().state_after
  Condition condition = Condition::null_token();
  double lambda = 0.0;  // guidance scale the pass was sampled with
};

// Guided noise prediction: eps_c + lambda * (eps_c - eps_null). The
// unconditional branch is evaluated internally with the null token; c must
// be a class condition.
Vec cfg_noise(const DenoiserParams& params, const NoiseSchedule& schedule, const Vec& x,
              const Condition& c, int t, double lambda);

// log N(x; mean, sigma^2 I)
double gaussian_log_density(const Vec& x, const Vec& mean, double sigma);

struct DdimStepResult {
  Vec x_prev;
  std::optional<double> log_prob;
  double sigma = 0.0;
};

// One reverse step t -> t-1:
//   eps    = cfg_noise(x_t)
//   x0_hat = (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
//   sigma  = eta sqrt((1 - ab_prev) / (1 - ab_t)) sqrt(1 - ab_t / ab_prev)
//   mean   = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps
//   x_prev = mean + sigma * noise
// log_prob is the density of x_prev given (mean, sigma^2 I) when sigma > 0.
// At t = 1, ab_prev == 1 forces sigma == 0 for every eta.
DdimStepResult ddim_step(const DenoiserParams& params, const NoiseSchedule& schedule,
                         const Vec& x_t, const Condition& c, int t, double lambda,
                         double eta, const Vec& noise);

// Full reverse pass t = T..1 from x_T, recording every step with its
// sampling-time log density.
RoundTrajectory sample_round(const DenoiserParams& params, const NoiseSchedule& schedule,
                             const Vec& x_T, const Condition& c, double lambda, double eta,
                             RngStream& rng, int round_index = 0);

// Deterministic inverse of the eta = 0 reverse step under the assumption
// that the noise prediction at x_{t-1} matches the one at x_t:
//   x_t = sqrt(ab_t / ab_prev) x_prev
//       + (sqrt(1 - ab_t) - sqrt(ab_t (1 - ab_prev) / ab_prev)) eps(x_prev)
Vec ddim_invert_step(const DenoiserParams& params, const NoiseSchedule& schedule,
                     const Vec& x_prev, const Condition& c, int t, double lambda);

// Runs the inversion for t = 1..T, producing the start state for the next
// reflection round. Guided at lambda_forward, typically below the denoising
// scale so condition information is injected through the gap.
Vec condition_guided_forward(const DenoiserParams& params, const NoiseSchedule& schedule,
                             const Vec& x0, const Condition& c, double lambda_forward);

// Squared distance between inversions of the same x0 at the two scales.
// Zero when the scales are equal or the net predicts zero noise.
double guidance_gap_diagnostic(const DenoiserParams& params, const NoiseSchedule& schedule,
                               const Vec& x0, const Condition& c, double lambda_forward,
                               double lambda_denoise);

}  // namespace srrl
