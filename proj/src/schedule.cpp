#include "srrl/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace srrl {

NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end) {
  if (num_steps < 1) throw std::domain_error("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end)) {
    throw std::domain_error("betas must satisfy 0 < beta_start <= beta_end < 1");
  }

  NoiseSchedule s;
  s.num_steps = num_steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas.resize(static_cast<std::size_t>(num_steps));
  s.alphas.resize(static_cast<std::size_t>(num_steps));
  s.alpha_bars.resize(static_cast<std::size_t>(num_steps));

  double running = 1.0;
  for (int i = 0; i < num_steps; ++i) {
    double frac = num_steps == 1 ? 0.0 : static_cast<double>(i) / (num_steps - 1);
    double beta = beta_start + (beta_end - beta_start) * frac;
    s.betas[i] = beta;
    s.alphas[i] = 1.0 - beta;
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

Vec q_sample(const NoiseSchedule& schedule, const Vec& x0, int t, const Vec& noise) {
  if (t < 1 || t > schedule.num_steps) throw std::invalid_argument("timestep out of range");
  if (x0.size() != noise.size()) throw std::invalid_argument("x0/noise dimension mismatch");

  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double spread = std::sqrt(1.0 - ab);
  Vec out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = signal * x0[i] + spread * noise[i];
  return out;
}

}  // namespace srrl
