#include "srrl/diagnostics.hpp"

#include <cmath>
#include <sstream>

namespace srrl {

namespace {

std::string format(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// max relative error between analytic backprop and central differences over
// every trainable parameter, a few random probes
double gradient_check_error(const DenoiserParams& probe, int num_steps, std::uint64_t seed) {
  const double h = 1e-5;
  double worst = 0.0;

  RngStream rng(derive_seed(seed, {7001}));
  for (int rep = 0; rep < 3; ++rep) {
    const Vec x = rng.gaussian_vec(probe.data_dim);
    const Vec upstream = rng.gaussian_vec(probe.data_dim);
    const Condition c = Condition::cls(rng.uniform_int(probe.cond_count));
    const int t = 1 + rng.uniform_int(num_steps);

    const ParamGradients analytic = backprop(probe, x, c, t, num_steps, upstream);
    Vec values = trainable_values(probe);
    DenoiserParams work = probe;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      set_trainable_values(work, values);
      const double up = dot(predict_noise(work, x, c, t, num_steps), upstream);
      values[i] = keep - h;
      set_trainable_values(work, values);
      const double down = dot(predict_noise(work, x, c, t, num_steps), upstream);
      values[i] = keep;

      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
      worst = std::max(worst, std::fabs(analytic[i] - fd) / denom);
    }
    set_trainable_values(work, values);
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> run_diagnostics(const DenoiserParams& params,
                                         const NoiseSchedule& schedule,
                                         FaultInjection fault) {
  std::vector<CheckResult> results;
  const std::uint64_t seed = 2024;

  {  // analytic gradients vs central differences on a small probe net
    DenoiserParams probe = make_denoiser(params.data_dim, params.cond_count, 8,
                                         params.time_embed_width, params.activation,
                                         params.adapter_enabled, params.adapter_rank, seed);
    {
      RngStream jitter(derive_seed(seed, {7002}));
      Vec values = trainable_values(probe);
      for (auto& v : values) v += 0.2 * jitter.gaussian();
      set_trainable_values(probe, values);
    }
    double err = gradient_check_error(probe, schedule.num_steps, seed);
    if (fault == FaultInjection::gradient) err += 1.0;
    results.push_back({"gradient.backprop_vs_fd", err < 1e-4,
                       "max relative error " + format(err) + " (tolerance 1e-4)"});
  }

  {  // inversion round trip with a constant-prediction net: exact algebra
    Vec value(static_cast<std::size_t>(params.data_dim));
    RngStream rng(derive_seed(seed, {7003}));
    for (auto& v : value) v = rng.gaussian();
    const DenoiserParams constant = make_constant_denoiser(
        params.data_dim, params.cond_count, 8, params.time_embed_width, value);

    const Vec x0 = rng.gaussian_vec(params.data_dim);
    const Condition c = Condition::cls(0);
    const double lambda = 1.5;
    const Vec x_T = condition_guided_forward(constant, schedule, x0, c, lambda);
    RngStream inert(0);
    const Vec back = sample_round(constant, schedule, x_T, c, lambda, 0.0, inert).terminal;

    double worst = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) worst = std::max(worst, std::fabs(back[i] - x0[i]));
    if (fault == FaultInjection::roundtrip) worst += 1e-6;
    results.push_back({"roundtrip.constant_prediction", worst < 1e-10,
                       "max coordinate error " + format(worst) + " (tolerance 1e-10)"});
  }

  {  // zero net: inversion telescopes to sqrt(alpha_bar_T) x0 exactly
    const DenoiserParams zero = make_constant_denoiser(
        params.data_dim, params.cond_count, 8, params.time_embed_width,
        Vec(static_cast<std::size_t>(params.data_dim), 0.0));
    RngStream rng(derive_seed(seed, {7004}));
    const Vec x0 = rng.gaussian_vec(params.data_dim);
    const Vec x_T = condition_guided_forward(zero, schedule, x0, Condition::cls(0), 2.0);
    const double factor = std::sqrt(schedule.alpha_bar(schedule.num_steps));
    double worst = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      worst = std::max(worst, std::fabs(x_T[i] - factor * x0[i]));
    }
    results.push_back({"roundtrip.zero_net_telescope", worst < 1e-12,
                       "max coordinate error " + format(worst) + " (tolerance 1e-12)"});
  }

  {  // guidance gap identities and a one-sided sweep on the model in hand
    RngStream rng(derive_seed(seed, {7005}));
    const Vec x0 = rng.gaussian_vec(params.data_dim);
    const Condition c = Condition::cls(0);
    const double base = 0.5;

    const double at_zero = guidance_gap_diagnostic(params, schedule, x0, c, base, base);
    bool ok = at_zero == 0.0;
    std::ostringstream detail;
    detail << "gap(0) = " << format(at_zero);

    double prev = -1.0;
    for (double gap : {0.0, 0.5, 1.0, 2.0}) {
      double delta = guidance_gap_diagnostic(params, schedule, x0, c, base, base + gap);
      if (fault == FaultInjection::gap && gap == 2.0) delta = prev - 1.0;
      if (delta < prev) ok = false;
      prev = delta;
      detail << ", gap(" << gap << ") = " << format(delta);
    }
    results.push_back({"gap.zero_and_monotone_sweep", ok, detail.str()});
  }

  {  // stochastic-step density integrates to 1 (d = 1 probe, eta = 1)
    const DenoiserParams probe =
        make_denoiser(1, 1, 8, params.time_embed_width, Activation::tanh, false, 1, seed);
    const NoiseSchedule sched =
        schedule.num_steps >= 2 ? schedule : make_linear_schedule(20, 1e-4, 0.02);
    const int t = sched.num_steps;  // earliest step has the widest sigma
    const Vec x_t{0.4};
    const Condition c = Condition::cls(0);

    const Vec zero_noise{0.0};
    const DdimStepResult center = ddim_step(probe, sched, x_t, c, t, 1.0, 1.0, zero_noise);
    const double sigma = center.sigma;
    const Vec mean = center.x_prev;  // zero noise puts x_prev at the mean

    const double width = 10.0 * sigma;
    const int n = 20000;
    double integral = 0.0;
    for (int i = 0; i <= n; ++i) {
      const Vec x{mean[0] - width + 2.0 * width * i / n};
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      integral += w * std::exp(gaussian_log_density(x, mean, sigma));
    }
    integral *= 2.0 * width / n;
    if (fault == FaultInjection::density) integral += 0.01;
    results.push_back({"density.integrates_to_one", std::fabs(integral - 1.0) < 1e-3,
                       "integral " + format(integral) + " (tolerance 1e-3)"});
  }

  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace srrl
