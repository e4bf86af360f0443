#include "srrl/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace srrl {

namespace {

double activate(Activation a, double z) {
  return a == Activation::tanh ? std::tanh(z) : z;
}

// derivative expressed through the activation value
double activate_grad(Activation a, double h) {
  return a == Activation::tanh ? 1.0 - h * h : 1.0;
}

// out = W x (+ up * (down * x) when the adapter is live)
void apply_layer(const Matrix& w, const Vec& b, const Adapter* ad, const Vec& x, Vec& z) {
  z.assign(static_cast<std::size_t>(w.rows), 0.0);
  for (int i = 0; i < w.rows; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = 0; j < w.cols; ++j) s += w(i, j) * x[static_cast<std::size_t>(j)];
    z[static_cast<std::size_t>(i)] = s;
  }
  if (ad != nullptr) {
    const Matrix& down = ad->down;
    const Matrix& up = ad->up;
    Vec mid(static_cast<std::size_t>(down.rows), 0.0);
    for (int r = 0; r < down.rows; ++r) {
      double s = 0.0;
      for (int j = 0; j < down.cols; ++j) s += down(r, j) * x[static_cast<std::size_t>(j)];
      mid[static_cast<std::size_t>(r)] = s;
    }
    for (int i = 0; i < up.rows; ++i) {
      double s = 0.0;
      for (int r = 0; r < up.cols; ++r) s += up(i, r) * mid[static_cast<std::size_t>(r)];
      z[static_cast<std::size_t>(i)] += s;
    }
  }
}

void check_dims(const DenoiserParams& p, const Vec& x, int t, int num_steps) {
  if (static_cast<int>(x.size()) != p.data_dim) {
    throw std::invalid_argument("state dimension mismatch");
  }
  if (t < 1 || t > num_steps) throw std::invalid_argument("timestep out of range");
  assert(all_finite(x));
}

}  // namespace

void time_embedding(int t, int num_steps, int width, double* dst) {
  const double tau = static_cast<double>(t) / num_steps;
  double freq = M_PI;
  for (int j = 0; j < width; j += 2) {
    dst[j] = std::sin(freq * tau);
    if (j + 1 < width) dst[j + 1] = std::cos(freq * tau);
    freq *= 2.0;
  }
}

DenoiserParams make_denoiser(int data_dim, int cond_count, int hidden_width,
                             int time_embed_width, Activation activation,
                             bool adapter_enabled, int adapter_rank,
                             std::uint64_t seed) {
  if (data_dim < 1 || cond_count < 1 || hidden_width < 1 || time_embed_width < 1) {
    throw std::invalid_argument("denoiser dimensions must be positive");
  }
  if (adapter_enabled && adapter_rank < 1) {
    throw std::invalid_argument("adapter rank must be positive");
  }

  DenoiserParams p;
  p.data_dim = data_dim;
  p.cond_count = cond_count;
  p.hidden_width = hidden_width;
  p.time_embed_width = time_embed_width;
  p.activation = activation;
  p.adapter_enabled = adapter_enabled;
  p.adapter_rank = adapter_rank;

  const int in = p.input_width();
  p.w1 = Matrix(hidden_width, in);
  p.b1.assign(static_cast<std::size_t>(hidden_width), 0.0);
  p.w2 = Matrix(hidden_width, hidden_width);
  p.b2.assign(static_cast<std::size_t>(hidden_width), 0.0);
  p.w3 = Matrix(data_dim, hidden_width);
  p.b3.assign(static_cast<std::size_t>(data_dim), 0.0);

  RngStream rng(derive_seed(seed, {stream::init}));
  auto fill = [&rng](Matrix& m, double scale) {
    for (auto& v : m.data) v = scale * rng.gaussian();
  };
  fill(p.w1, 1.0 / std::sqrt(static_cast<double>(in)));
  // condition columns start at zero: an untrained net ignores the condition
  const int cond_offset = data_dim + time_embed_width;
  for (int i = 0; i < p.w1.rows; ++i) {
    for (int j = cond_offset; j < in; ++j) p.w1(i, j) = 0.0;
  }
  fill(p.w2, 1.0 / std::sqrt(static_cast<double>(hidden_width)));
  fill(p.w3, 1.0 / std::sqrt(static_cast<double>(hidden_width)));

  if (adapter_enabled) {
    p.adapter1.down = Matrix(adapter_rank, in);
    p.adapter1.up = Matrix(hidden_width, adapter_rank);
    p.adapter2.down = Matrix(adapter_rank, hidden_width);
    p.adapter2.up = Matrix(hidden_width, adapter_rank);
    fill(p.adapter1.down, 1.0 / std::sqrt(static_cast<double>(in)));
    fill(p.adapter2.down, 1.0 / std::sqrt(static_cast<double>(hidden_width)));
    // up factors stay zero
  }
  return p;
}

DenoiserParams make_constant_denoiser(int data_dim, int cond_count, int hidden_width,
                                      int time_embed_width, const Vec& value) {
  if (static_cast<int>(value.size()) != data_dim) {
    throw std::invalid_argument("constant value dimension mismatch");
  }
  DenoiserParams p = make_denoiser(data_dim, cond_count, hidden_width, time_embed_width,
                                   Activation::tanh, false, 1, 0);
  for (auto& v : p.w1.data) v = 0.0;
  for (auto& v : p.w2.data) v = 0.0;
  for (auto& v : p.w3.data) v = 0.0;
  p.b3 = value;
  return p;
}

std::size_t trainable_size(const DenoiserParams& p) {
  if (p.adapter_enabled) {
    return p.adapter1.down.size() + p.adapter1.up.size() + p.adapter2.down.size() +
           p.adapter2.up.size();
  }
  return p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size() + p.w3.size() + p.b3.size();
}

namespace {

template <typename Fn>
void visit_trainable(const DenoiserParams& p, Fn&& fn) {
  if (p.adapter_enabled) {
    fn(p.adapter1.down.data);
    fn(p.adapter1.up.data);
    fn(p.adapter2.down.data);
    fn(p.adapter2.up.data);
  } else {
    fn(p.w1.data);
    fn(p.b1);
    fn(p.w2.data);
    fn(p.b2);
    fn(p.w3.data);
    fn(p.b3);
  }
}

template <typename Fn>
void visit_trainable(DenoiserParams& p, Fn&& fn) {
  if (p.adapter_enabled) {
    fn(p.adapter1.down.data);
    fn(p.adapter1.up.data);
    fn(p.adapter2.down.data);
    fn(p.adapter2.up.data);
  } else {
    fn(p.w1.data);
    fn(p.b1);
    fn(p.w2.data);
    fn(p.b2);
    fn(p.w3.data);
    fn(p.b3);
  }
}

}  // namespace

Vec trainable_values(const DenoiserParams& p) {
  Vec out;
  out.reserve(trainable_size(p));
  visit_trainable(p, [&out](const Vec& v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

void set_trainable_values(DenoiserParams& p, const Vec& values) {
  if (values.size() != trainable_size(p)) {
    throw std::invalid_argument("trainable value count mismatch");
  }
  std::size_t at = 0;
  visit_trainable(p, [&values, &at](Vec& v) {
    for (auto& x : v) x = values[at++];
  });
}

void predict_noise_cached(const DenoiserParams& p, const Vec& x, const Condition& c, int t,
                          int num_steps, ForwardCache& cache) {
  check_dims(p, x, t, num_steps);
  const int in = p.input_width();

  cache.input.assign(static_cast<std::size_t>(in), 0.0);
  for (int i = 0; i < p.data_dim; ++i) cache.input[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
  time_embedding(t, num_steps, p.time_embed_width, cache.input.data() + p.data_dim);
  c.embed_into(cache.input.data() + p.data_dim + p.time_embed_width, p.cond_count);

  const Adapter* a1 = p.adapter_enabled ? &p.adapter1 : nullptr;
  const Adapter* a2 = p.adapter_enabled ? &p.adapter2 : nullptr;

  apply_layer(p.w1, p.b1, a1, cache.input, cache.z1);
  cache.h1.resize(cache.z1.size());
  for (std::size_t i = 0; i < cache.z1.size(); ++i) cache.h1[i] = activate(p.activation, cache.z1[i]);

  apply_layer(p.w2, p.b2, a2, cache.h1, cache.z2);
  cache.h2.resize(cache.z2.size());
  for (std::size_t i = 0; i < cache.z2.size(); ++i) cache.h2[i] = activate(p.activation, cache.z2[i]);

  apply_layer(p.w3, p.b3, nullptr, cache.h2, cache.out);
}

Vec predict_noise(const DenoiserParams& p, const Vec& x, const Condition& c, int t,
                  int num_steps) {
  ForwardCache cache;
  predict_noise_cached(p, x, c, t, num_steps, cache);
  return cache.out;
}

void accumulate_backprop(const DenoiserParams& p, const ForwardCache& cache,
                         const Vec& upstream, ParamGradients& grads) {
  if (static_cast<int>(upstream.size()) != p.data_dim) {
    throw std::invalid_argument("upstream dimension mismatch");
  }
  if (grads.size() != trainable_size(p)) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }

  const int hw = p.hidden_width;

  // back through the linear output layer
  Vec gh2(static_cast<std::size_t>(hw), 0.0);
  for (int i = 0; i < p.data_dim; ++i) {
    const double u = upstream[static_cast<std::size_t>(i)];
    for (int j = 0; j < hw; ++j) gh2[static_cast<std::size_t>(j)] += p.w3(i, j) * u;
  }

  Vec gz2(static_cast<std::size_t>(hw));
  for (int i = 0; i < hw; ++i) {
    gz2[static_cast<std::size_t>(i)] =
        gh2[static_cast<std::size_t>(i)] * activate_grad(p.activation, cache.h2[static_cast<std::size_t>(i)]);
  }

  // back through layer 2 (effective weight includes the adapter)
  Vec gh1(static_cast<std::size_t>(hw), 0.0);
  for (int i = 0; i < hw; ++i) {
    const double g = gz2[static_cast<std::size_t>(i)];
    for (int j = 0; j < hw; ++j) gh1[static_cast<std::size_t>(j)] += p.w2(i, j) * g;
  }
  if (p.adapter_enabled) {
    const Adapter& ad = p.adapter2;
    Vec tmp(static_cast<std::size_t>(ad.up.cols), 0.0);  // up^T gz2
    for (int r = 0; r < ad.up.cols; ++r) {
      double s = 0.0;
      for (int i = 0; i < ad.up.rows; ++i) s += ad.up(i, r) * gz2[static_cast<std::size_t>(i)];
      tmp[static_cast<std::size_t>(r)] = s;
    }
    for (int r = 0; r < ad.down.rows; ++r) {
      const double g = tmp[static_cast<std::size_t>(r)];
      for (int j = 0; j < ad.down.cols; ++j) gh1[static_cast<std::size_t>(j)] += ad.down(r, j) * g;
    }
  }

  Vec gz1(static_cast<std::size_t>(hw));
  for (int i = 0; i < hw; ++i) {
    gz1[static_cast<std::size_t>(i)] =
        gh1[static_cast<std::size_t>(i)] * activate_grad(p.activation, cache.h1[static_cast<std::size_t>(i)]);
  }

  std::size_t at = 0;
  auto add_outer = [&grads, &at](const Vec& rows, const Vec& cols) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double r = rows[i];
      for (std::size_t j = 0; j < cols.size(); ++j) grads[at++] += r * cols[j];
    }
  };
  auto add_vec = [&grads, &at](const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i) grads[at++] += v[i];
  };

  if (p.adapter_enabled) {
    // dW = g x^T, so dDown = up^T g x^T and dUp = g (down x)^T
    auto adapter_grads = [&](const Adapter& ad, const Vec& g, const Vec& x_in) {
      Vec upT_g(static_cast<std::size_t>(ad.up.cols), 0.0);
      for (int r = 0; r < ad.up.cols; ++r) {
        double s = 0.0;
        for (int i = 0; i < ad.up.rows; ++i) s += ad.up(i, r) * g[static_cast<std::size_t>(i)];
        upT_g[static_cast<std::size_t>(r)] = s;
      }
      Vec down_x(static_cast<std::size_t>(ad.down.rows), 0.0);
      for (int r = 0; r < ad.down.rows; ++r) {
        double s = 0.0;
        for (int j = 0; j < ad.down.cols; ++j) s += ad.down(r, j) * x_in[static_cast<std::size_t>(j)];
        down_x[static_cast<std::size_t>(r)] = s;
      }
      add_outer(upT_g, x_in);   // down factor
      add_outer(g, down_x);     // up factor
    };
    adapter_grads(p.adapter1, gz1, cache.input);
    adapter_grads(p.adapter2, gz2, cache.h1);
  } else {
    add_outer(gz1, cache.input);
    add_vec(gz1);
    add_outer(gz2, cache.h1);
    add_vec(gz2);
    add_outer(upstream, cache.h2);
    add_vec(upstream);
  }
}

ParamGradients backprop(const DenoiserParams& p, const Vec& x, const Condition& c, int t,
                        int num_steps, const Vec& upstream) {
  ForwardCache cache;
  predict_noise_cached(p, x, c, t, num_steps, cache);
  ParamGradients grads(trainable_size(p), 0.0);
  accumulate_backprop(p, cache, upstream, grads);
  return grads;
}

OptimizerState make_optimizer(const DenoiserParams& params, double learning_rate,
                              double beta1, double beta2, double weight_decay,
                              double epsilon) {
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  opt.beta1 = beta1;
  opt.beta2 = beta2;
  opt.weight_decay = weight_decay;
  opt.epsilon = epsilon;
  opt.m.assign(trainable_size(params), 0.0);
  opt.v.assign(trainable_size(params), 0.0);
  return opt;
}

void adam_update(DenoiserParams& params, OptimizerState& opt, const ParamGradients& grads) {
  if (grads.size() != trainable_size(params) || grads.size() != opt.m.size()) {
    throw std::invalid_argument("gradient/optimizer shape mismatch");
  }
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

  Vec values = trainable_values(params);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grads[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
    const double mhat = opt.m[i] / bc1;
    const double vhat = opt.v[i] / bc2;
    values[i] -= opt.learning_rate * (mhat / (std::sqrt(vhat) + opt.epsilon) +
                                      opt.weight_decay * values[i]);
  }
  set_trainable_values(params, values);
}

double pretrain_step(DenoiserParams& params, OptimizerState& opt,
                     std::span<const Example> batch, const NoiseSchedule& schedule,
                     double cond_dropout_prob, RngStream& rng) {
  if (batch.empty()) throw std::invalid_argument("empty pretraining batch");
  if (cond_dropout_prob < 0.0 || cond_dropout_prob > 1.0) {
    throw std::invalid_argument("cond_dropout_prob must lie in [0, 1]");
  }

  const int d = params.data_dim;
  const double inv = 1.0 / (static_cast<double>(batch.size()) * d);

  ParamGradients grads(trainable_size(params), 0.0);
  ForwardCache cache;
  double loss = 0.0;
  for (const Example& ex : batch) {
    const int t = 1 + rng.uniform_int(schedule.num_steps);
    const Vec noise = rng.gaussian_vec(d);
    const bool drop = rng.uniform() < cond_dropout_prob;
    const Condition c = drop ? Condition::null_token() : ex.c;

    const Vec xt = q_sample(schedule, ex.x0, t, noise);
    predict_noise_cached(params, xt, c, t, schedule.num_steps, cache);

    Vec residual(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      residual[static_cast<std::size_t>(i)] =
          cache.out[static_cast<std::size_t>(i)] - noise[static_cast<std::size_t>(i)];
      loss += residual[static_cast<std::size_t>(i)] * residual[static_cast<std::size_t>(i)];
    }
    // d(mse)/d(out) = 2 residual, scaled by the batch/dim average
    for (auto& r : residual) r *= 2.0 * inv;
    accumulate_backprop(params, cache, residual, grads);
  }
  adam_update(params, opt, grads);
  return loss * inv;
}

}  // namespace srrl
