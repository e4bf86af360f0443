#include <doctest.h>

#include <cmath>

#include "srrl/rl.hpp"
#include "support/oracles.hpp"

using namespace srrl;

namespace {

const NoiseSchedule kTwoStep = make_linear_schedule(2, 0.5, 0.5);

DenoiserParams jittered_net(std::uint64_t seed, int d = 1, int conds = 2) {
  DenoiserParams p = make_denoiser(d, conds, 6, 4, Activation::tanh, false, 1, seed);
  RngStream rng(seed + 1);
  Vec values = trainable_values(p);
  for (auto& v : values) v += 0.3 * rng.gaussian();
  set_trainable_values(p, values);
  return p;
}

// single stochastic step at t = 2 of the two-step schedule, with the stored
// density offset so the recomputed ratio equals `ratio` exactly
RoundTrajectory synthetic_trajectory(const DenoiserParams& params, double ratio) {
  RngStream rng(77);
  RoundTrajectory traj = sample_round(params, kTwoStep, {1.0}, Condition::cls(0), 0.5, 1.0, rng);
  for (auto& step : traj.steps) {
    if (step.log_prob_old.has_value()) {
      step.log_prob_old = *step.log_prob_old - std::log(ratio);
    }
  }
  return traj;
}

}  // namespace

TEST_CASE("reward oracles") {
  SUBCASE("relational constraint at the margin is exactly one half") {
    const RewardOracle oracle = RelationalConstraintReward{0, 1, 0.5, 3.0};
    CHECK(evaluate_reward(oracle, {1.5, 1.0}, Condition::cls(0)) == doctest::Approx(0.5));
  }

  SUBCASE("relational constraint saturates") {
    const RewardOracle oracle = RelationalConstraintReward{0, 1, 0.0, 2.0};
    CHECK(evaluate_reward(oracle, {100.0, 0.0}, Condition::cls(0)) == doctest::Approx(1.0));
    CHECK(evaluate_reward(oracle, {0.0, 100.0}, Condition::cls(0)) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("single standard-normal mode at the origin") {
    const RewardOracle oracle =
        ModeAffinityReward{{{GaussianMode{{0.0, 0.0}, 1.0}}}};
    CHECK(evaluate_reward(oracle, {0.0, 0.0}, Condition::cls(0)) ==
          doctest::Approx(-1.8378770664093453).epsilon(1e-12));
  }

  SUBCASE("mixture weights normalize") {
    // two equal modes at the same point behave like one
    const RewardOracle one = ModeAffinityReward{{{GaussianMode{{1.0}, 1.0}}}};
    const RewardOracle two =
        ModeAffinityReward{{{GaussianMode{{1.0}, 2.0}, GaussianMode{{1.0}, 2.0}}}};
    CHECK(evaluate_reward(two, {0.3}, Condition::cls(0)) ==
          doctest::Approx(evaluate_reward(one, {0.3}, Condition::cls(0))).epsilon(1e-12));
  }

  SUBCASE("condition without targets throws") {
    const RewardOracle oracle = ModeAffinityReward{{{GaussianMode{{0.0}, 1.0}}}};
    CHECK_THROWS_AS(evaluate_reward(oracle, {0.0}, Condition::cls(3)), std::invalid_argument);
  }
}

TEST_CASE("advantage normalization") {
  SUBCASE("constant group is degenerate") {
    const RewardGroup g = normalize_advantages({2.0, 2.0, 2.0});
    CHECK(g.degenerate);
    CHECK(g.advantages == std::vector<double>{0.0, 0.0, 0.0});
  }

  SUBCASE("hand cases") {
    const RewardGroup g = normalize_advantages({1.0, 2.0, 3.0});
    CHECK(g.advantages[0] == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(g.advantages[1] == doctest::Approx(0.0));
    CHECK(g.advantages[2] == doctest::Approx(1.224744871391589).epsilon(1e-12));

    const RewardGroup h = normalize_advantages({0.0, 1.0});
    CHECK(h.advantages[0] == doctest::Approx(-1.0));
    CHECK(h.advantages[1] == doctest::Approx(1.0));
  }

  SUBCASE("too-small groups throw") {
    CHECK_THROWS_AS(normalize_advantages({1.0}), std::invalid_argument);
  }

  SUBCASE("mean-zero std-one contract and affine invariance, many random groups") {
    RngStream rng(404);
    for (int rep = 0; rep < 1000; ++rep) {
      const int n = 2 + rng.uniform_int(15);
      std::vector<double> rewards(static_cast<std::size_t>(n));
      for (auto& r : rewards) r = 3.0 * rng.gaussian();

      const RewardGroup g = normalize_advantages(rewards);
      if (g.degenerate) continue;

      double mean = 0.0, var = 0.0;
      for (double a : g.advantages) mean += a;
      mean /= n;
      for (double a : g.advantages) var += (a - mean) * (a - mean);
      const double stdev = std::sqrt(var / n);
      CHECK(std::fabs(mean) < 1e-9);
      CHECK(std::fabs(stdev - 1.0) < 1e-9);

      // positive-affine transform leaves advantages and selection alone
      const double scale = 0.1 + 5.0 * rng.uniform();
      const double shift = 10.0 * rng.gaussian();
      std::vector<double> transformed(rewards.size());
      for (std::size_t i = 0; i < rewards.size(); ++i) {
        transformed[i] = scale * rewards[i] + shift;
      }
      const RewardGroup g2 = normalize_advantages(transformed);
      REQUIRE_FALSE(g2.degenerate);
      for (std::size_t i = 0; i < rewards.size(); ++i) {
        CHECK(std::fabs(g.advantages[i] - g2.advantages[i]) < 1e-9);
      }
      CHECK(contrastive_select(g) == contrastive_select(g2));
    }
  }
}

TEST_CASE("contrastive selection") {
  SUBCASE("direct argmax and argmin") {
    const RewardGroup g = normalize_advantages({0.1, 0.9, 0.5});
    CHECK(contrastive_select(g) == std::make_pair(1, 0));
  }

  SUBCASE("ties break to the lowest index") {
    const RewardGroup g = normalize_advantages({5.0, 5.0, 1.0});
    CHECK(contrastive_select(g) == std::make_pair(0, 2));
  }

  SUBCASE("monotone transforms do not change the selection") {
    RngStream rng(405);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> rewards(6);
      for (auto& r : rewards) r = rng.gaussian();
      const RewardGroup g = normalize_advantages(rewards);
      if (g.degenerate) continue;
      std::vector<double> cubed(rewards.size());
      for (std::size_t i = 0; i < rewards.size(); ++i) {
        cubed[i] = rewards[i] * rewards[i] * rewards[i] + 2.0;  // strictly increasing
      }
      CHECK(contrastive_select(g) == contrastive_select(normalize_advantages(cubed)));
    }
  }

  SUBCASE("degenerate group yields no selection") {
    CHECK_FALSE(contrastive_select(normalize_advantages({1.0, 1.0})).has_value());
  }
}

TEST_CASE("ppo objective") {
  SUBCASE("unchanged parameters give ratio one everywhere") {
    const DenoiserParams p = jittered_net(501);
    RngStream rng(502);
    const NoiseSchedule s = make_linear_schedule(6, 1e-3, 0.2);
    const RoundTrajectory traj = sample_round(p, s, {0.4}, Condition::cls(1), 1.5, 1.0, rng);

    const double advantage = 0.7;
    const PpoResult res = ppo_objective(traj, p, s, advantage, 0.2);
    const int stochastic = 5;  // T - 1 of them; the final step has no density
    CHECK(res.objective == doctest::Approx(stochastic * advantage).epsilon(1e-12));
    CHECK(res.clip_fraction == 0.0);
  }

  SUBCASE("clip arithmetic on a single step") {
    const DenoiserParams p = jittered_net(503);

    // ratio 1.3 above the clip window, positive advantage: clipped at 1.2
    RoundTrajectory up = synthetic_trajectory(p, 1.3);
    const PpoResult a = ppo_objective(up, p, kTwoStep, 1.0, 0.2);
    CHECK(a.objective == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(a.clip_fraction == 1.0);

    // ratio 0.5 below the window, negative advantage: min picks the clipped branch
    RoundTrajectory down = synthetic_trajectory(p, 0.5);
    const PpoResult b = ppo_objective(down, p, kTwoStep, -1.0, 0.2);
    CHECK(b.objective == doctest::Approx(-0.8).epsilon(1e-9));
    CHECK(b.clip_fraction == 1.0);

    // ratio 0.5, positive advantage: unclipped branch wins the min
    const PpoResult c = ppo_objective(down, p, kTwoStep, 1.0, 0.2);
    CHECK(c.objective == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c.clip_fraction == 0.0);
  }

  SUBCASE("trajectory with no stochastic steps throws") {
    const DenoiserParams p = jittered_net(504);
    const NoiseSchedule one = make_linear_schedule(1, 0.5, 0.5);
    RngStream rng(505);
    const RoundTrajectory traj = sample_round(p, one, {1.0}, Condition::cls(0), 0.0, 1.0, rng);
    CHECK_THROWS_AS(ppo_objective(traj, p, one, 1.0, 0.2), std::invalid_argument);
  }

  SUBCASE("clip_eps must lie in (0, 1)") {
    const DenoiserParams p = jittered_net(506);
    const RoundTrajectory traj = synthetic_trajectory(p, 1.0);
    CHECK_THROWS_AS(ppo_objective(traj, p, kTwoStep, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ppo_objective(traj, p, kTwoStep, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("ppo gradient") {
  SUBCASE("zero advantage gives zero gradient") {
    const DenoiserParams p = jittered_net(511);
    const RoundTrajectory traj = synthetic_trajectory(p, 1.0);
    const ParamGradients g = ppo_gradient(traj, p, kTwoStep, 0.0, 0.2);
    for (double v : g) CHECK(v == 0.0);
  }

  SUBCASE("matches finite differences away from the clip boundary") {
    const DenoiserParams sampler_net = jittered_net(512);
    const NoiseSchedule s = make_linear_schedule(4, 1e-2, 0.2);
    RngStream rng(513);
    const RoundTrajectory traj =
        sample_round(sampler_net, s, {0.6}, Condition::cls(0), 1.0, 1.0, rng);

    // evaluate at slightly moved parameters so ratios sit near but not at 1
    DenoiserParams moved = sampler_net;
    {
      RngStream jitter(514);
      Vec values = trainable_values(moved);
      for (auto& v : values) v += 0.01 * jitter.gaussian();
      set_trainable_values(moved, values);
    }

    const double advantage = -1.3;
    const double clip_eps = 0.2;
    const ParamGradients analytic = ppo_gradient(traj, moved, s, advantage, clip_eps);
    const auto fd = oracles::finite_difference(moved, [&](const DenoiserParams& q) {
      return ppo_objective(traj, q, s, advantage, clip_eps).objective;
    });
    CHECK(oracles::max_relative_error(analytic, fd) < 1e-4);
  }

  SUBCASE("a binding clip kills the step gradient") {
    const DenoiserParams p = jittered_net(515);
    // ratio far above the window with positive advantage: clipped branch,
    // constant in the parameters
    const RoundTrajectory traj = synthetic_trajectory(p, 3.0);
    const ParamGradients g = ppo_gradient(traj, p, kTwoStep, 1.0, 0.2);
    for (double v : g) CHECK(v == 0.0);
  }
}

TEST_CASE("reinforce gradient") {
  SUBCASE("zero reward gives zero gradient") {
    const DenoiserParams p = jittered_net(521);
    const RoundTrajectory traj = synthetic_trajectory(p, 1.0);
    const ParamGradients g = reinforce_gradient(traj, p, kTwoStep, 0.0);
    for (double v : g) CHECK(v == 0.0);
  }

  SUBCASE("coincides with ppo at ratio one and advantage equal to reward") {
    const DenoiserParams p = jittered_net(522);
    const NoiseSchedule s = make_linear_schedule(5, 1e-2, 0.2);
    RngStream rng(523);
    const RoundTrajectory traj = sample_round(p, s, {0.2}, Condition::cls(1), 2.0, 1.0, rng);

    const double reward = 1.7;
    const ParamGradients a = reinforce_gradient(traj, p, s, reward);
    const ParamGradients b = ppo_gradient(traj, p, s, reward, 0.2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
  }

  SUBCASE("monte-carlo mean matches the finite difference of the expected reward") {
    // one-dimensional two-step instance: only the t = 2 step is stochastic;
    // the t = 1 map is deterministic and excluded from the estimator, so the
    // oracle perturbs the stochastic step's parameters while keeping the
    // final map frozen. Projection onto a fixed direction keeps this a
    // single 3-sigma comparison.
    const DenoiserParams p = jittered_net(531);
    const Condition c = Condition::cls(0);
    const double lambda = 0.5;
    const Vec x_start{0.7};

    const RewardOracle oracle = ModeAffinityReward{{{GaussianMode{{1.0}, 1.0}}}};

    RngStream dir_rng(532);
    Vec direction(trainable_size(p));
    double norm = 0.0;
    for (auto& v : direction) {
      v = dir_rng.gaussian();
      norm += v * v;
    }
    for (auto& v : direction) v /= std::sqrt(norm);

    // quadrature oracle for J(theta) with the t = 1 map frozen at p
    auto expected_reward = [&](const DenoiserParams& q) {
      const DdimStepResult center =
          ddim_step(q, kTwoStep, x_start, c, 2, lambda, 1.0, {0.0});
      const double sigma = center.sigma;
      const Vec mean = center.x_prev;
      const int n = 4000;
      const double width = 8.0;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double z = -width + 2.0 * width * i / n;
        const Vec x1{mean[0] + sigma * z};
        const DdimStepResult last = ddim_step(p, kTwoStep, x1, c, 1, lambda, 1.0, {0.0});
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) *
               evaluate_reward(oracle, last.x_prev, c);
      }
      return acc * 2.0 * width / n;
    };

    const double h = 1e-4;
    Vec values = trainable_values(p);
    DenoiserParams up = p, down = p;
    Vec vu = values, vd = values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      vu[i] += h * direction[i];
      vd[i] -= h * direction[i];
    }
    set_trainable_values(up, vu);
    set_trainable_values(down, vd);
    const double fd = (expected_reward(up) - expected_reward(down)) / (2.0 * h);

    const int n_traj = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n_traj; ++i) {
      RngStream rng(derive_seed(533, {static_cast<std::uint64_t>(i)}));
      const RoundTrajectory traj = sample_round(p, kTwoStep, x_start, c, lambda, 1.0, rng);
      const double reward = evaluate_reward(oracle, traj.terminal, c);
      const ParamGradients g = reinforce_gradient(traj, p, kTwoStep, reward);
      const double proj = dot(g, direction);
      sum += proj;
      sum_sq += proj * proj;
    }
    const double mc_mean = sum / n_traj;
    const double mc_var = sum_sq / n_traj - mc_mean * mc_mean;
    const double se = std::sqrt(mc_var / n_traj);

    CHECK(std::fabs(mc_mean - fd) < 3.0 * se);
  }
}
