#include "srrl/dataset.hpp"

namespace srrl {

namespace {

int pick_mode(const std::vector<GaussianMode>& modes, RngStream& rng) {
  double total = 0.0;
  for (const auto& m : modes) total += m.weight;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    u -= modes[i].weight;
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(modes.size()) - 1;
}

}  // namespace

std::vector<Example> generate_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  std::vector<Example> data(static_cast<std::size_t>(config.dataset_size));
  for (int i = 0; i < config.dataset_size; ++i) {
    RngStream rng(derive_seed(seed, {stream::dataset, static_cast<std::uint64_t>(i)}));
    const int cond = rng.uniform_int(config.cond_count);

    Example ex;
    ex.c = Condition::cls(cond);
    if (config.task == ExperimentConfig::Task::modes) {
      const auto& modes = config.modes[static_cast<std::size_t>(cond)];
      const auto& mode = modes[static_cast<std::size_t>(pick_mode(modes, rng))];
      ex.x0.resize(static_cast<std::size_t>(config.data_dim));
      for (int j = 0; j < config.data_dim; ++j) {
        ex.x0[static_cast<std::size_t>(j)] =
            mode.mean[static_cast<std::size_t>(j)] + rng.gaussian();
      }
    } else {
      ex.x0 = rng.gaussian_vec(config.data_dim);
    }
    data[static_cast<std::size_t>(i)] = std::move(ex);
  }
  return data;
}

}  // namespace srrl
