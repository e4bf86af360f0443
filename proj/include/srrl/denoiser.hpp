#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srrl/condition.hpp"
#include "srrl/linalg.hpp"
#include "srrl/rng.hpp"
#include "srrl/schedule.hpp"

namespace srrl {

enum class Activation { tanh, linear };

// Low-rank adapter pair for one weight matrix. The effective weight is
// base + up * down (up: out x rank, down: rank x in); up starts at zero so a
// freshly adapted net computes exactly the base function.
struct Adapter {
  Matrix down;
  Matrix up;
};

// Conditional noise predictor eps(x, c, t): an MLP over the concatenation
// [x | time_embedding(t/T) | condition one-hot], two hidden layers, linear
// output of width data_dim. With adapters enabled the base weights and
// biases are frozen; only the adapter factors on the two hidden-layer
// matrices are trainable.
struct DenoiserParams {
  int data_dim = 2;
  int cond_count = 1;
  int hidden_width = 64;
  int time_embed_width = 8;
  Activation activation = Activation::tanh;

  Matrix w1;
  Vec b1;
  Matrix w2;
  Vec b2;
  Matrix w3;
  Vec b3;

  bool adapter_enabled = false;
  int adapter_rank = 4;
  Adapter adapter1;  // on w1
  Adapter adapter2;  // on w2

  int input_width() const { return data_dim + time_embed_width + cond_count; }
};

// Weights ~ N(0, 1/fan_in), biases zero. First-layer columns that read the
// condition one-hot start at zero, so an untrained net is condition-agnostic
// (the conditional and unconditional branches coincide until training
// separates them). Adapter down factors are random, up factors zero.
DenoiserParams make_denoiser(int data_dim, int cond_count, int hidden_width,
                             int time_embed_width, Activation activation,
                             bool adapter_enabled, int adapter_rank,
                             std::uint64_t seed);

// A net whose prediction is the constant vector `value` for every input.
DenoiserParams make_constant_denoiser(int data_dim, int cond_count, int hidden_width,
                                      int time_embed_width, const Vec& value);

// Flat views over the trainable set: all weights and biases, or only the
// adapter factors when adapters are enabled. Order is fixed and shared by
// gradients and optimizer state.
std::size_t trainable_size(const DenoiserParams& params);
Vec trainable_values(const DenoiserParams& params);
void set_trainable_values(DenoiserParams& params, const Vec& values);

// Gradient w.r.t. the trainable set, flat in trainable_values order.
using ParamGradients = Vec;

// Sinusoidal embedding of t/num_steps; sin/cos pairs at frequencies pi * 2^j.
void time_embedding(int t, int num_steps, int width, double* dst);

// Activations kept by a forward pass so the backward pass can reuse them.
struct ForwardCache {
  Vec input;
  Vec z1, h1;
  Vec z2, h2;
  Vec out;
};

// Deterministic forward pass; t in [1, num_steps].
Vec predict_noise(const DenoiserParams& params, const Vec& x, const Condition& c, int t,
                  int num_steps);
void predict_noise_cached(const DenoiserParams& params, const Vec& x, const Condition& c,
                          int t, int num_steps, ForwardCache& cache);

// Accumulates d<out, upstream>/d(trainable) into grads (sized
// trainable_size). cache must come from predict_noise_cached on the same
// params.
void accumulate_backprop(const DenoiserParams& params, const ForwardCache& cache,
                         const Vec& upstream, ParamGradients& grads);

// Exact analytic gradient of <predict_noise(x, c, t), upstream> w.r.t. every
// trainable parameter.
ParamGradients backprop(const DenoiserParams& params, const Vec& x, const Condition& c,
                        int t, int num_steps, const Vec& upstream);

// Adam with bias correction and decoupled weight decay. Moment accumulators
// are sized to the trainable set of the params the optimizer was made for.
struct OptimizerState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double epsilon = 1e-8;
  long step = 0;
  Vec m;
  Vec v;
};

OptimizerState make_optimizer(const DenoiserParams& params, double learning_rate = 1e-4,
                              double beta1 = 0.9, double beta2 = 0.999,
                              double weight_decay = 1e-4, double epsilon = 1e-8);

// One in-place update; grads must match the trainable size.
void adam_update(DenoiserParams& params, OptimizerState& opt, const ParamGradients& grads);

struct Example {
  Vec x0;
  Condition c = Condition::null_token();
};

// One optimizer step on the mean squared error between true and predicted
// noise at uniformly sampled timesteps. Each example's condition is replaced
// by the null token with probability cond_dropout_prob so the unconditional
// branch stays usable for guidance. Returns the batch loss.
double pretrain_step(DenoiserParams& params, OptimizerState& opt,
                     std::span<const Example> batch, const NoiseSchedule& schedule,
                     double cond_dropout_prob, RngStream& rng);

}  // namespace srrl
