#include "srrl/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace srrl {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"shape", {m.rows, m.cols}}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("shape").at(0).get<int>(), j.at("shape").at(1).get<int>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols)) {
    throw CheckpointError("tensor data does not match its declared shape");
  }
  return m;
}

json vec_to_json(const Vec& v) {
  return json{{"shape", {static_cast<int>(v.size())}}, {"data", v}};
}

Vec vec_from_json(const json& j) {
  Vec v = j.at("data").get<Vec>();
  if (v.size() != j.at("shape").at(0).get<std::size_t>()) {
    throw CheckpointError("tensor data does not match its declared shape");
  }
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j;
  j["format_version"] = ckpt.format_version;
  j["schedule"] = {{"num_steps", ckpt.num_steps},
                   {"beta_start", ckpt.beta_start},
                   {"beta_end", ckpt.beta_end}};

  const DenoiserParams& p = ckpt.params;
  j["model"] = {{"data_dim", p.data_dim},
                {"cond_count", p.cond_count},
                {"hidden_width", p.hidden_width},
                {"time_embed_width", p.time_embed_width},
                {"activation", p.activation == Activation::tanh ? "tanh" : "linear"},
                {"adapter_enabled", p.adapter_enabled},
                {"adapter_rank", p.adapter_rank}};

  json tensors;
  tensors["w1"] = matrix_to_json(p.w1);
  tensors["b1"] = vec_to_json(p.b1);
  tensors["w2"] = matrix_to_json(p.w2);
  tensors["b2"] = vec_to_json(p.b2);
  tensors["w3"] = matrix_to_json(p.w3);
  tensors["b3"] = vec_to_json(p.b3);
  if (p.adapter_enabled) {
    tensors["adapter1.down"] = matrix_to_json(p.adapter1.down);
    tensors["adapter1.up"] = matrix_to_json(p.adapter1.up);
    tensors["adapter2.down"] = matrix_to_json(p.adapter2.down);
    tensors["adapter2.up"] = matrix_to_json(p.adapter2.up);
  }
  j["tensors"] = std::move(tensors);

  j["provenance"] = {{"config_hash", ckpt.config_hash},
                     {"seed", ckpt.seed},
                     {"rounds_completed", ckpt.rounds_completed}};

  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());

  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != 1) {
      throw CheckpointError("checkpoint format version mismatch: file has version " +
                            std::to_string(ckpt.format_version) + ", this build reads 1");
    }

    const json& sched = j.at("schedule");
    ckpt.num_steps = sched.at("num_steps").get<int>();
    ckpt.beta_start = sched.at("beta_start").get<double>();
    ckpt.beta_end = sched.at("beta_end").get<double>();

    const json& model = j.at("model");
    DenoiserParams& p = ckpt.params;
    p.data_dim = model.at("data_dim").get<int>();
    p.cond_count = model.at("cond_count").get<int>();
    p.hidden_width = model.at("hidden_width").get<int>();
    p.time_embed_width = model.at("time_embed_width").get<int>();
    p.activation =
        model.at("activation").get<std::string>() == "linear" ? Activation::linear : Activation::tanh;
    p.adapter_enabled = model.at("adapter_enabled").get<bool>();
    p.adapter_rank = model.at("adapter_rank").get<int>();

    const json& tensors = j.at("tensors");
    p.w1 = matrix_from_json(tensors.at("w1"));
    p.b1 = vec_from_json(tensors.at("b1"));
    p.w2 = matrix_from_json(tensors.at("w2"));
    p.b2 = vec_from_json(tensors.at("b2"));
    p.w3 = matrix_from_json(tensors.at("w3"));
    p.b3 = vec_from_json(tensors.at("b3"));
    if (p.adapter_enabled) {
      p.adapter1.down = matrix_from_json(tensors.at("adapter1.down"));
      p.adapter1.up = matrix_from_json(tensors.at("adapter1.up"));
      p.adapter2.down = matrix_from_json(tensors.at("adapter2.down"));
      p.adapter2.up = matrix_from_json(tensors.at("adapter2.up"));
    }

    const json& prov = j.at("provenance");
    ckpt.config_hash = prov.at("config_hash").get<std::string>();
    ckpt.seed = prov.at("seed").get<std::uint64_t>();
    ckpt.rounds_completed = prov.at("rounds_completed").get<int>();
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return ckpt;
}

NoiseSchedule schedule_of(const Checkpoint& ckpt) {
  return make_linear_schedule(ckpt.num_steps, ckpt.beta_start, ckpt.beta_end);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace srrl
