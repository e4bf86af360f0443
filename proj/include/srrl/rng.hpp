#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace srrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream addressing: every consumer of randomness derives its own seed from
// the master seed plus a fixed integer path (purpose tag, loop indices, ...).
// A stream's draws depend only on its path, never on how many other streams
// exist or in which order they run, so serial and parallel execution see
// identical numbers.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master ^ 0x5851f42d4c957f2dull);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
  return s;
}

// Purpose tags for derive_seed paths.
namespace stream {
constexpr std::uint64_t init = 1;
constexpr std::uint64_t pretrain = 2;
constexpr std::uint64_t chain = 3;
constexpr std::uint64_t eval = 4;
constexpr std::uint64_t dataset = 5;
constexpr std::uint64_t condition = 6;
}  // namespace stream

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double gaussian() { return normal_(engine_); }

  std::vector<double> gaussian_vec(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = gaussian();
    return v;
  }

  int uniform_int(int n) {  // [0, n)
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace srrl
