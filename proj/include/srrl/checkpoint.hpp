#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "srrl/denoiser.hpp"
#include "srrl/schedule.hpp"

namespace srrl {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned JSON snapshot of a model plus the few scalars needed to rebuild
// its schedule (derived tables are recomputed on load). Arrays are plain
// decimal numbers with declared shapes, and save(load(save(x))) is
// byte-identical to save(x).
struct Checkpoint {
  int format_version = 1;

  int num_steps = 20;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  DenoiserParams params;

  std::string config_hash;
  std::uint64_t seed = 0;
  int rounds_completed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

NoiseSchedule schedule_of(const Checkpoint& ckpt);

// FNV-1a, hex-encoded; used to stamp checkpoints with their config.
std::string fnv1a_hex(std::string_view text);

}  // namespace srrl
