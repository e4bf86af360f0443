#include "srrl/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace srrl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
  }
  return true;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": invalid key `" + key + "`");
    }
    if (cfg.entries_.count(key) != 0) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key `" + key + "`");
    }
    cfg.entries_[key] = Entry{value, line_no, false};
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void KeyValueConfig::fail(const std::string& key, const std::string& message) const {
  auto it = entries_.find(key);
  const int line = it == entries_.end() ? 0 : it->second.line;
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": key `" + key + "`: " + message);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.read = true;
  return it->second.value;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.read = true;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second.value, &used);
    if (used != it->second.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(key, "expected a number, got `" + it->second.value + "`");
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.read = true;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second.value, &used);
    if (used != it->second.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(key, "expected an integer, got `" + it->second.value + "`");
  }
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key, std::uint64_t fallback) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.read = true;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second.value, &used);
    if (used != it->second.value.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    fail(key, "expected an unsigned integer, got `" + it->second.value + "`");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.read = true;
  const std::string& v = it->second.value;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(key, "expected true/false, got `" + v + "`");
}

std::vector<std::string> KeyValueConfig::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (!entry.read) out.push_back(key + " (line " + std::to_string(entry.line) + ")");
  }
  return out;
}

namespace {

// "x,y,w ; x,y,w" -> modes with d-dim means and a trailing weight each
std::vector<GaussianMode> parse_modes(KeyValueConfig& kv, const std::string& key,
                                      const std::string& raw, int data_dim) {
  std::vector<GaussianMode> modes;
  std::istringstream groups(raw);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::vector<double> nums;
    std::istringstream parts(group);
    std::string part;
    while (std::getline(parts, part, ',')) {
      try {
        nums.push_back(std::stod(part));
      } catch (const std::exception&) {
        kv.fail(key, "expected comma-separated numbers, got `" + part + "`");
      }
    }
    if (static_cast<int>(nums.size()) != data_dim + 1) {
      kv.fail(key, "each mode needs data_dim mean values plus a weight");
    }
    GaussianMode m;
    m.mean.assign(nums.begin(), nums.end() - 1);
    m.weight = nums.back();
    if (!(m.weight > 0.0) || !std::isfinite(m.weight)) kv.fail(key, "mode weight must be positive");
    modes.push_back(std::move(m));
  }
  if (modes.empty()) kv.fail(key, "no modes given");
  return modes;
}

std::string format_modes(const std::vector<GaussianMode>& modes) {
  std::ostringstream out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i > 0) out << " ; ";
    for (double v : modes[i].mean) out << v << ",";
    out << modes[i].weight;
  }
  return out.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  KeyValueConfig kv = KeyValueConfig::parse_file(path);
  return from_kv(kv);
}

ExperimentConfig ExperimentConfig::from_kv(KeyValueConfig& kv) {
  ExperimentConfig c;

  const std::string task = kv.get_string("task", "relational");
  if (task == "modes") {
    c.task = Task::modes;
  } else if (task == "relational") {
    c.task = Task::relational;
  } else {
    kv.fail("task", "unknown task `" + task + "` (expected modes or relational)");
  }

  c.data_dim = kv.get_int("data_dim", c.data_dim);
  c.cond_count = kv.get_int("num_conditions", c.cond_count);
  c.seed = kv.get_uint64("seed", c.seed);
  c.output_dir = kv.get_string("output_dir", c.output_dir);
  c.parallel = kv.get_bool("parallel", c.parallel);

  c.num_steps = kv.get_int("schedule.num_steps", c.num_steps);
  c.beta_start = kv.get_double("schedule.beta_start", c.beta_start);
  c.beta_end = kv.get_double("schedule.beta_end", c.beta_end);

  c.hidden_width = kv.get_int("model.hidden_width", c.hidden_width);
  c.time_embed_width = kv.get_int("model.time_embed_width", c.time_embed_width);
  const std::string act = kv.get_string("model.activation", "tanh");
  if (act == "tanh") {
    c.activation = Activation::tanh;
  } else if (act == "linear") {
    c.activation = Activation::linear;
  } else {
    kv.fail("model.activation", "expected tanh or linear");
  }
  c.adapter_enabled = kv.get_bool("model.adapter_enabled", c.adapter_enabled);
  c.adapter_rank = kv.get_int("model.adapter_rank", c.adapter_rank);

  c.pretrain_steps = kv.get_int("pretrain.steps", c.pretrain_steps);
  c.pretrain_batch = kv.get_int("pretrain.batch_size", c.pretrain_batch);
  c.dataset_size = kv.get_int("pretrain.dataset_size", c.dataset_size);
  c.cond_dropout_prob = kv.get_double("pretrain.cond_dropout_prob", c.cond_dropout_prob);
  c.pretrain_learning_rate = kv.get_double("pretrain.learning_rate", c.pretrain_learning_rate);
  c.pretrain_weight_decay = kv.get_double("pretrain.weight_decay", c.pretrain_weight_decay);

  c.train_rounds = kv.get_int("train.rounds", c.train_rounds);
  c.samples_per_batch = kv.get_int("train.samples_per_batch", c.samples_per_batch);
  c.epochs_per_round = kv.get_int("train.epochs_per_round", c.epochs_per_round);
  c.eta_final_round = kv.get_double("train.eta_final_round", c.eta_final_round);
  c.clip_eps = kv.get_double("train.clip_eps", c.clip_eps);
  c.train_learning_rate = kv.get_double("train.learning_rate", c.train_learning_rate);
  c.train_weight_decay = kv.get_double("train.weight_decay", c.train_weight_decay);

  c.adam_beta1 = kv.get_double("optim.beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("optim.beta2", c.adam_beta2);
  c.adam_epsilon = kv.get_double("optim.epsilon", c.adam_epsilon);

  c.guidance.lambda_denoise = kv.get_double("guidance.lambda_denoise", c.guidance.lambda_denoise);
  c.guidance.lambda_forward = kv.get_double("guidance.lambda_forward", c.guidance.lambda_forward);
  c.guidance.lambda_inference =
      kv.get_double("guidance.lambda_inference", c.guidance.lambda_inference);

  c.relational.index_a = kv.get_int("relational.index_a", c.relational.index_a);
  c.relational.index_b = kv.get_int("relational.index_b", c.relational.index_b);
  c.relational.margin = kv.get_double("relational.margin", c.relational.margin);
  c.relational.sharpness = kv.get_double("relational.sharpness", c.relational.sharpness);

  if (c.cond_count < 1) kv.fail("num_conditions", "need at least one condition");
  if (c.data_dim < 1) kv.fail("data_dim", "need at least one dimension");

  if (c.task == Task::modes) {
    for (int i = 0; i < c.cond_count; ++i) {
      const std::string key = "modes.cond" + std::to_string(i);
      const std::string raw = kv.get_string(key, "");
      if (raw.empty()) kv.fail(key, "modes task requires targets for every condition");
      c.modes.push_back(parse_modes(kv, key, raw, c.data_dim));
    }
  } else {
    if (c.relational.index_a == c.relational.index_b) {
      kv.fail("relational.index_b", "constraint indices must differ");
    }
    if (c.relational.index_a < 0 || c.relational.index_a >= c.data_dim ||
        c.relational.index_b < 0 || c.relational.index_b >= c.data_dim) {
      kv.fail("relational.index_a", "constraint index out of range for data_dim");
    }
    if (!(c.relational.sharpness > 0.0)) kv.fail("relational.sharpness", "sharpness must be positive");
  }

  const auto leftovers = kv.unread_keys();
  if (!leftovers.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : leftovers) msg += " " + k;
    throw ConfigError(msg);
  }
  return c;
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "task = " << (task == Task::modes ? "modes" : "relational") << "\n";
  out << "data_dim = " << data_dim << "\n";
  out << "num_conditions = " << cond_count << "\n";
  out << "seed = " << seed << "\n";
  out << "output_dir = " << output_dir << "\n";
  out << "parallel = " << (parallel ? "true" : "false") << "\n";
  out << "schedule.num_steps = " << num_steps << "\n";
  out << "schedule.beta_start = " << beta_start << "\n";
  out << "schedule.beta_end = " << beta_end << "\n";
  out << "model.hidden_width = " << hidden_width << "\n";
  out << "model.time_embed_width = " << time_embed_width << "\n";
  out << "model.activation = " << (activation == Activation::tanh ? "tanh" : "linear") << "\n";
  out << "model.adapter_enabled = " << (adapter_enabled ? "true" : "false") << "\n";
  out << "model.adapter_rank = " << adapter_rank << "\n";
  out << "pretrain.steps = " << pretrain_steps << "\n";
  out << "pretrain.batch_size = " << pretrain_batch << "\n";
  out << "pretrain.dataset_size = " << dataset_size << "\n";
  out << "pretrain.cond_dropout_prob = " << cond_dropout_prob << "\n";
  out << "pretrain.learning_rate = " << pretrain_learning_rate << "\n";
  out << "pretrain.weight_decay = " << pretrain_weight_decay << "\n";
  out << "train.rounds = " << train_rounds << "\n";
  out << "train.samples_per_batch = " << samples_per_batch << "\n";
  out << "train.epochs_per_round = " << epochs_per_round << "\n";
  out << "train.eta_final_round = " << eta_final_round << "\n";
  out << "train.clip_eps = " << clip_eps << "\n";
  out << "train.learning_rate = " << train_learning_rate << "\n";
  out << "train.weight_decay = " << train_weight_decay << "\n";
  out << "optim.beta1 = " << adam_beta1 << "\n";
  out << "optim.beta2 = " << adam_beta2 << "\n";
  out << "optim.epsilon = " << adam_epsilon << "\n";
  out << "guidance.lambda_denoise = " << guidance.lambda_denoise << "\n";
  out << "guidance.lambda_forward = " << guidance.lambda_forward << "\n";
  out << "guidance.lambda_inference = " << guidance.lambda_inference << "\n";
  if (task == Task::modes) {
    for (int i = 0; i < cond_count; ++i) {
      out << "modes.cond" << i << " = " << format_modes(modes[static_cast<std::size_t>(i)])
          << "\n";
    }
  } else {
    out << "relational.index_a = " << relational.index_a << "\n";
    out << "relational.index_b = " << relational.index_b << "\n";
    out << "relational.margin = " << relational.margin << "\n";
    out << "relational.sharpness = " << relational.sharpness << "\n";
  }
  return out.str();
}

std::vector<int> ExperimentConfig::condition_ids() const {
  std::vector<int> ids(static_cast<std::size_t>(cond_count));
  for (int i = 0; i < cond_count; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

RewardOracle ExperimentConfig::make_oracle() const {
  if (task == Task::modes) return ModeAffinityReward{modes};
  return relational;
}

TrainConfig ExperimentConfig::make_train_config() const {
  TrainConfig tc;
  tc.reflection_rounds = train_rounds;
  tc.samples_per_batch = samples_per_batch;
  tc.epochs_per_round = epochs_per_round;
  tc.guidance = guidance;
  tc.eta_final_round = eta_final_round;
  tc.clip_eps = clip_eps;
  tc.learning_rate = train_learning_rate;
  tc.adam_beta1 = adam_beta1;
  tc.adam_beta2 = adam_beta2;
  tc.weight_decay = train_weight_decay;
  tc.adam_epsilon = adam_epsilon;
  tc.seed = seed;
  tc.condition_ids = condition_ids();
  tc.exec_mode = parallel ? ExecMode::parallel : ExecMode::serial;
  return tc;
}

}  // namespace srrl
