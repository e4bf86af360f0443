// Command-line front end: pretrain | train | sample | eval | diagnose.
// Exit codes: 0 success, 1 usage/config error, 2 failed numerical check.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "srrl/checkpoint.hpp"
#include "srrl/config.hpp"
#include "srrl/dataset.hpp"
#include "srrl/diagnostics.hpp"
#include "srrl/metrics.hpp"
#include "srrl/reflect.hpp"
#include "srrl/svg.hpp"

namespace fs = std::filesystem;
using namespace srrl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string checkpoint_path;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::load(args.config_path);
  if (args.seed_override.has_value()) cfg.seed = *args.seed_override;
  return cfg;
}

// Every run leaves the fully expanded config next to its outputs so any
// result can be reproduced from the artifacts alone.
void log_resolved_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "resolved_config.cfg");
  out << cfg.resolved_text();
}

RewardFn reward_fn_of(const RewardOracle& oracle) {
  return [oracle](const Vec& x, const Condition& c) { return evaluate_reward(oracle, x, c); };
}

Checkpoint checkpoint_from(const ExperimentConfig& cfg, const DenoiserParams& params,
                           int rounds_completed) {
  Checkpoint ckpt;
  ckpt.num_steps = cfg.num_steps;
  ckpt.beta_start = cfg.beta_start;
  ckpt.beta_end = cfg.beta_end;
  ckpt.params = params;
  ckpt.config_hash = fnv1a_hex(cfg.resolved_text());
  ckpt.seed = cfg.seed;
  ckpt.rounds_completed = rounds_completed;
  return ckpt;
}

int cmd_pretrain(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  log_resolved_config(cfg);

  const NoiseSchedule schedule = make_linear_schedule(cfg.num_steps, cfg.beta_start, cfg.beta_end);
  const std::vector<Example> data = generate_dataset(cfg, cfg.seed);

  DenoiserParams params =
      make_denoiser(cfg.data_dim, cfg.cond_count, cfg.hidden_width, cfg.time_embed_width,
                    cfg.activation, false, cfg.adapter_rank, cfg.seed);
  OptimizerState opt = make_optimizer(params, cfg.pretrain_learning_rate, cfg.adam_beta1,
                                      cfg.adam_beta2, cfg.pretrain_weight_decay,
                                      cfg.adam_epsilon);

  RngStream rng(derive_seed(cfg.seed, {stream::pretrain}));
  double loss = 0.0;
  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    std::vector<Example> batch(static_cast<std::size_t>(cfg.pretrain_batch));
    for (auto& ex : batch) {
      ex = data[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data.size())))];
    }
    loss = pretrain_step(params, opt, batch, schedule, cfg.cond_dropout_prob, rng);
    if ((step + 1) % 200 == 0 || step + 1 == cfg.pretrain_steps) {
      std::cout << "pretrain step " << step + 1 << "/" << cfg.pretrain_steps
                << " loss " << loss << "\n";
    }
  }

  // enable adapters for the fine-tuning stage; zero-initialized up factors
  // keep the function unchanged
  if (cfg.adapter_enabled) {
    DenoiserParams adapted =
        make_denoiser(cfg.data_dim, cfg.cond_count, cfg.hidden_width, cfg.time_embed_width,
                      cfg.activation, true, cfg.adapter_rank, cfg.seed);
    adapted.w1 = params.w1;
    adapted.b1 = params.b1;
    adapted.w2 = params.w2;
    adapted.b2 = params.b2;
    adapted.w3 = params.w3;
    adapted.b3 = params.b3;
    params = adapted;
  }

  const fs::path out = fs::path(cfg.output_dir) / "pretrained.json";
  save_checkpoint(checkpoint_from(cfg, params, 0), out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  log_resolved_config(cfg);

  const fs::path in = args.checkpoint_path.empty()
                          ? fs::path(cfg.output_dir) / "pretrained.json"
                          : fs::path(args.checkpoint_path);
  const Checkpoint pretrained = load_checkpoint(in);
  const NoiseSchedule schedule = schedule_of(pretrained);

  const TrainConfig tc = cfg.make_train_config();
  const RewardOracle oracle = cfg.make_oracle();

  MetricsCsvWriter csv(fs::path(cfg.output_dir) / "metrics.csv");
  const TrainResult result =
      train(tc, schedule, pretrained.params, reward_fn_of(oracle), [&](const MetricsRow& row) {
        csv.write(row);
        std::cout << "round " << row.round << " epoch " << row.epoch << " mean reward "
                  << row.mean_reward << (row.skipped ? " (skipped)" : "") << "\n";
      });

  const fs::path out = fs::path(cfg.output_dir) / "trained.json";
  save_checkpoint(checkpoint_from(cfg, result.params, cfg.train_rounds), out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_sample(const CommonArgs& args, int rounds, int count, const std::string& dump_path) {
  const ExperimentConfig cfg = load_config(args);
  log_resolved_config(cfg);

  const fs::path in = args.checkpoint_path.empty()
                          ? fs::path(cfg.output_dir) / "trained.json"
                          : fs::path(args.checkpoint_path);
  const Checkpoint ckpt = load_checkpoint(in);
  const NoiseSchedule schedule = schedule_of(ckpt);
  const RewardOracle oracle = cfg.make_oracle();

  std::ofstream csv(fs::path(cfg.output_dir) / "samples.csv");
  csv.precision(17);
  csv << "round,sample,condition";
  for (int j = 0; j < ckpt.params.data_dim; ++j) csv << ",x" << j;
  csv << ",reward\n";

  std::ofstream dump;
  if (!dump_path.empty()) dump.open(dump_path);

  std::vector<std::vector<ScatterPoint>> per_round(static_cast<std::size_t>(rounds) + 1);
  for (int i = 0; i < count; ++i) {
    const int cond_id = i % cfg.cond_count;
    const Condition c = Condition::cls(cond_id);
    RngStream rng(derive_seed(cfg.seed, {stream::eval, static_cast<std::uint64_t>(cond_id),
                                         static_cast<std::uint64_t>(i)}));
    RngStream inert(0);

    Vec x_T = rng.gaussian_vec(ckpt.params.data_dim);
    for (int k = 0; k <= rounds; ++k) {
      const RoundTrajectory round = sample_round(ckpt.params, schedule, x_T, c,
                                                 cfg.guidance.lambda_inference, 0.0, inert, k);
      const double reward = evaluate_reward(oracle, round.terminal, c);
      csv << k << "," << i << "," << cond_id;
      for (double v : round.terminal) csv << "," << v;
      csv << "," << reward << "\n";

      if (dump.is_open()) {
        nlohmann::json line;
        line["sample"] = i;
        line["round"] = k;
        line["condition"] = cond_id;
        line["terminal"] = round.terminal;
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& step : round.steps) {
          nlohmann::json js;
          js["t"] = step.t;
          js["sigma"] = step.sigma;
          if (step.log_prob_old.has_value()) js["log_prob"] = *step.log_prob_old;
          js["state_before"] = step.state_before;
          js["state_after"] = step.state_after;
          steps.push_back(std::move(js));
        }
        line["steps"] = std::move(steps);
        dump << line.dump() << "\n";
      }

      const double px = round.terminal[0];
      const double py = ckpt.params.data_dim > 1 ? round.terminal[1] : 0.0;
      per_round[static_cast<std::size_t>(k)].push_back({px, py, k, cond_id});
      if (k < rounds) {
        x_T = condition_guided_forward(ckpt.params, schedule, round.terminal, c,
                                       cfg.guidance.lambda_forward);
      }
    }
  }

  for (int k = 0; k <= rounds; ++k) {
    std::ostringstream name;
    name << "round_" << std::setw(2) << std::setfill('0') << k << ".svg";
    std::ofstream svg(fs::path(cfg.output_dir) / name.str());
    svg << render_scatter_svg(per_round[static_cast<std::size_t>(k)], rounds,
                              "reflection round " + std::to_string(k));
  }
  std::cout << "wrote samples.csv and " << rounds + 1 << " scatter plots to " << cfg.output_dir
            << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, int max_rounds, int n_samples) {
  const ExperimentConfig cfg = load_config(args);
  log_resolved_config(cfg);

  const fs::path in = args.checkpoint_path.empty()
                          ? fs::path(cfg.output_dir) / "trained.json"
                          : fs::path(args.checkpoint_path);
  const Checkpoint ckpt = load_checkpoint(in);
  const NoiseSchedule schedule = schedule_of(ckpt);
  const RewardOracle oracle = cfg.make_oracle();
  if (max_rounds < 0) max_rounds = cfg.train_rounds;

  const std::vector<double> means = evaluate_rounds(
      ckpt.params, schedule, cfg.condition_ids(), max_rounds, cfg.guidance,
      reward_fn_of(oracle), n_samples, cfg.seed,
      cfg.parallel ? ExecMode::parallel : ExecMode::serial);

  std::ofstream csv(fs::path(cfg.output_dir) / "round_rewards.csv");
  csv.precision(17);
  csv << "round,mean_reward\n";
  for (std::size_t k = 0; k < means.size(); ++k) {
    csv << k << "," << means[k] << "\n";
    std::cout << "round " << k << " mean reward " << means[k] << "\n";
  }
  std::cout << "wrote round_rewards.csv to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_diagnose(const CommonArgs& args, const std::string& fault_name) {
  const ExperimentConfig cfg = load_config(args);
  log_resolved_config(cfg);

  FaultInjection fault = FaultInjection::none;
  if (fault_name == "gradient") {
    fault = FaultInjection::gradient;
  } else if (fault_name == "roundtrip") {
    fault = FaultInjection::roundtrip;
  } else if (fault_name == "gap") {
    fault = FaultInjection::gap;
  } else if (fault_name == "density") {
    fault = FaultInjection::density;
  } else if (!fault_name.empty()) {
    std::cerr << "unknown fault `" << fault_name
              << "` (expected gradient|roundtrip|gap|density)\n";
    return 1;
  }

  NoiseSchedule schedule;
  DenoiserParams params;
  if (!args.checkpoint_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    schedule = schedule_of(ckpt);
    params = ckpt.params;
  } else {
    schedule = make_linear_schedule(cfg.num_steps, cfg.beta_start, cfg.beta_end);
    params = make_denoiser(cfg.data_dim, cfg.cond_count, cfg.hidden_width,
                           cfg.time_embed_width, cfg.activation, cfg.adapter_enabled,
                           cfg.adapter_rank, cfg.seed);
  }

  const auto results = run_diagnostics(params, schedule, fault);
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
  }
  return all_passed(results) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflective diffusion policy laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  int sample_rounds = 5;
  int sample_count = 128;
  int eval_rounds = -1;
  int eval_samples = 64;
  std::string fault_name;
  std::string dump_path;

  auto add_common = [&args](CLI::App* cmd, bool with_checkpoint) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seed", args.seed_override, "override the config seed");
    if (with_checkpoint) {
      cmd->add_option("--checkpoint", args.checkpoint_path, "checkpoint to load");
    }
  };

  CLI::App* pretrain = app.add_subcommand("pretrain", "fit the conditional noise predictor");
  add_common(pretrain, false);
  CLI::App* train_cmd = app.add_subcommand("train", "reflective policy optimization");
  add_common(train_cmd, true);
  CLI::App* sample = app.add_subcommand("sample", "draw reflective samples, write csv + svg");
  add_common(sample, true);
  sample->add_option("--rounds", sample_rounds, "reflection rounds");
  sample->add_option("--num", sample_count, "number of samples");
  sample->add_option("--dump-trajectories", dump_path,
                     "also write every round trajectory as JSON lines");
  CLI::App* eval = app.add_subcommand("eval", "mean reward per reflection round");
  add_common(eval, true);
  eval->add_option("--rounds", eval_rounds, "deepest round (default: train.rounds)");
  eval->add_option("--samples", eval_samples, "samples per condition");
  CLI::App* diagnose = app.add_subcommand("diagnose", "numerical health checks");
  add_common(diagnose, true);
  diagnose->add_option("--inject-fault", fault_name,
                       "perturb one check to exercise the failure path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (pretrain->parsed()) return cmd_pretrain(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (sample->parsed()) return cmd_sample(args, sample_rounds, sample_count, dump_path);
    if (eval->parsed()) return cmd_eval(args, eval_rounds, eval_samples);
    if (diagnose->parsed()) return cmd_diagnose(args, fault_name);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
