#pragma once

#include <vector>

#include "srrl/linalg.hpp"

namespace srrl {

// Variance schedule shared by the forward and denoising processes.
// Arrays are indexed t = 1..T (stored at t-1); alpha_bar(0) == 1 by
// convention, so denoising all the way to t = 0 yields a clean sample.
struct NoiseSchedule {
  int num_steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> betas;       // beta_t in (0,1)
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // running product of alphas, strictly decreasing

  double beta(int t) const { return betas[static_cast<std::size_t>(t) - 1]; }
  double alpha(int t) const { return alphas[static_cast<std::size_t>(t) - 1]; }
  double alpha_bar(int t) const {
    return t == 0 ? 1.0 : alpha_bars[static_cast<std::size_t>(t) - 1];
  }
};

// Betas linearly interpolated inclusive of both endpoints (T = 1 uses
// beta_start alone). Throws std::domain_error unless
// 0 < beta_start <= beta_end < 1 and T >= 1. Deterministic: identical
// inputs give bitwise-identical tables.
NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end);

// Closed-form marginal of the forward process:
//   x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.
// The caller supplies the noise draw. Throws std::invalid_argument on
// dimension mismatch or t outside [1, T].
Vec q_sample(const NoiseSchedule& schedule, const Vec& x0, int t, const Vec& noise);

}  // namespace srrl
