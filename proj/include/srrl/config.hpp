#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "srrl/reflect.hpp"

namespace srrl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `key = value` file: one pair per line, `#` starts a comment, dotted
// keys for nesting. Values stay raw strings until a typed accessor parses
// them; every error message carries the offending line number.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text,
                                     const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback);

  // Keys present in the file but never read by any accessor; used to reject
  // misspelled keys after a config has been fully consumed.
  std::vector<std::string> unread_keys() const;
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool read = false;
  };
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

// Everything a run needs, resolved from a config file plus defaults.
struct ExperimentConfig {
  enum class Task { modes, relational };

  Task task = Task::relational;
  int data_dim = 2;
  int cond_count = 2;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool parallel = true;

  int num_steps = 20;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  int hidden_width = 64;
  int time_embed_width = 8;
  Activation activation = Activation::tanh;
  bool adapter_enabled = true;
  int adapter_rank = 4;

  int pretrain_steps = 2000;
  int pretrain_batch = 64;
  int dataset_size = 8192;
  double cond_dropout_prob = 0.1;
  double pretrain_learning_rate = 1e-4;
  double pretrain_weight_decay = 1e-4;

  int train_rounds = 10;        // K
  int samples_per_batch = 32;   // G
  int epochs_per_round = 2;     // E
  double eta_final_round = 1.0;
  double clip_eps = 0.2;
  double train_learning_rate = 1e-4;
  double train_weight_decay = 1e-4;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  GuidanceConfig guidance;

  RelationalConstraintReward relational{0, 1, 1.0, 2.0};
  std::vector<std::vector<GaussianMode>> modes;  // per condition, modes task only

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_kv(KeyValueConfig& kv);

  // All keys with defaults expanded, in a fixed order; reparses to itself.
  std::string resolved_text() const;

  std::vector<int> condition_ids() const;
  RewardOracle make_oracle() const;
  TrainConfig make_train_config() const;
};

}  // namespace srrl
