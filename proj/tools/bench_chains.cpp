// Times group chain sampling in serial and OpenMP mode on the same seeds and
// checks the two modes agree bitwise.

#include <chrono>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "srrl/parallel.hpp"
#include "srrl/reflect.hpp"

using namespace srrl;

namespace {

double run_group(const DenoiserParams& params, const NoiseSchedule& schedule, int group,
                 int depth, ExecMode mode, std::vector<Vec>& terminals) {
  const GuidanceConfig guidance;
  terminals.assign(static_cast<std::size_t>(group), {});
  const auto start = std::chrono::steady_clock::now();
  for_each_index(group, mode, [&](int i) {
    RngStream rng(derive_seed(99, {stream::chain, 0, 0, static_cast<std::uint64_t>(i)}));
    const ReflectionChain chain =
        build_chain(params, schedule, Condition::cls(i % params.cond_count), depth, guidance,
                    1.0, rng);
    terminals[static_cast<std::size_t>(i)] = chain.terminal();
  });
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel group sampling benchmark"};
  int hidden = 64;
  int steps = 20;
  int group = 32;
  int depth = 4;
  int repeats = 3;
  app.add_option("--hidden", hidden, "hidden width");
  app.add_option("--steps", steps, "denoising steps");
  app.add_option("--group", group, "chains per group");
  app.add_option("--depth", depth, "reflection rounds per chain");
  app.add_option("--repeats", repeats, "timing repetitions");
  CLI11_PARSE(app, argc, argv);

  const NoiseSchedule schedule = make_linear_schedule(steps, 1e-4, 0.02);
  const DenoiserParams params =
      make_denoiser(2, 2, hidden, 8, Activation::tanh, false, 4, 7);

  std::cout << "threads available: " << max_threads() << "\n";
  std::vector<Vec> serial_out, parallel_out;
  double serial_best = 1e300;
  double parallel_best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    serial_best = std::min(serial_best, run_group(params, schedule, group, depth,
                                                  ExecMode::serial, serial_out));
    parallel_best = std::min(parallel_best, run_group(params, schedule, group, depth,
                                                      ExecMode::parallel, parallel_out));
  }

  bool identical = serial_out.size() == parallel_out.size();
  for (std::size_t i = 0; identical && i < serial_out.size(); ++i) {
    identical = serial_out[i] == parallel_out[i];
  }

  std::cout << "serial:   " << serial_best << " ms\n";
  std::cout << "parallel: " << parallel_best << " ms\n";
  std::cout << "speedup:  " << serial_best / parallel_best << "x\n";
  std::cout << "results " << (identical ? "identical" : "DIFFER") << "\n";
  return identical ? 0 : 1;
}
