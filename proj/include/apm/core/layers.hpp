#pragma once

// Parameterized building blocks shared by the encoder, prompt modules and
// heads. Each layer registers its tensors in a ParameterStore under a prefix.

#include <cmath>
#include <string>

#include "apm/core/ops.hpp"
#include "apm/core/parameters.hpp"
#include "apm/core/rng.hpp"

namespace apm {

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
         Rng& rng, bool with_bias = true, ParamKind kind = ParamKind::trainable) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = store.add(name + ".weight", uniform_tensor<T>({in, out}, bound, rng), kind);
    if (with_bias) bias_ = store.add(name + ".bias", uniform_tensor<T>({out}, bound, rng), kind);
  }

  Var<T> operator()(const Var<T>& x) const { return ops::linear(x, weight_, bias_); }

  const Var<T>& weight() const { return weight_; }

 private:
  Var<T> weight_;
  Var<T> bias_;
};

template <typename T>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
         std::size_t width, std::size_t dilation, Rng& rng, bool with_bias = false)
      : width_(width), dilation_(dilation) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * width));
    kernel_ = store.add(name + ".kernel", uniform_tensor<T>({width, in, out}, bound, rng));
    if (with_bias) bias_ = store.add(name + ".bias", uniform_tensor<T>({out}, bound, rng));
  }

  Var<T> operator()(const Var<T>& x) const { return ops::dilated_conv1d(x, kernel_, dilation_, bias_); }

  std::size_t span() const { return dilation_ * (width_ - 1); }

 private:
  Var<T> kernel_;
  Var<T> bias_;
  std::size_t width_ = 1;
  std::size_t dilation_ = 1;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParameterStore<T>& store, const std::string& name, std::size_t channels,
            double momentum = 0.1) {
    gain_ = store.add(name + ".gain", Tensor<T>({channels}, T{1}));
    bias_ = store.add(name + ".bias", Tensor<T>({channels}, T{0}));
    running_mean_ = store.add(name + ".running_mean", Tensor<T>({channels}, T{0}), ParamKind::buffer);
    running_var_ = store.add(name + ".running_var", Tensor<T>({channels}, T{1}), ParamKind::buffer);
    momentum_ = static_cast<T>(momentum);
  }

  Var<T> operator()(const Var<T>& x, bool training) {
    ops::BatchNormState<T> state{&running_mean_.mutable_value(), &running_var_.mutable_value(),
                                 momentum_, T(1e-5)};
    return ops::batch_norm(x, gain_, bias_, state, training);
  }

 private:
  Var<T> gain_, bias_, running_mean_, running_var_;
  T momentum_ = T(0.1);
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t channels,
            ParamKind kind = ParamKind::trainable) {
    gain_ = store.add(name + ".gain", Tensor<T>({channels}, T{1}), kind);
    bias_ = store.add(name + ".bias", Tensor<T>({channels}, T{0}), kind);
  }

  Var<T> operator()(const Var<T>& x) const { return ops::layer_norm(x, gain_, bias_); }

 private:
  Var<T> gain_, bias_;
};

/// Single-head attention with query/key/value/output projections.
template <typename T>
class Attention {
 public:
  Attention() = default;
  Attention(ParameterStore<T>& store, const std::string& name, std::size_t channels, Rng& rng,
            ParamKind kind = ParamKind::trainable)
      : query_(store, name + ".query", channels, channels, rng, true, kind),
        key_(store, name + ".key", channels, channels, rng, true, kind),
        value_(store, name + ".value", channels, channels, rng, true, kind),
        out_(store, name + ".out", channels, channels, rng, true, kind) {}

  Var<T> operator()(const Var<T>& queries, const Var<T>& context) const {
    return out_(ops::scaled_dot_attention(query_(queries), key_(context), value_(context)));
  }

 private:
  Linear<T> query_, key_, value_, out_;
};

template <typename T>
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterStore<T>& store, const std::string& name, std::size_t channels,
              std::size_t hidden, Rng& rng, ParamKind kind = ParamKind::trainable)
      : up_(store, name + ".up", channels, hidden, rng, true, kind),
        down_(store, name + ".down", hidden, channels, rng, true, kind) {}

  Var<T> operator()(const Var<T>& x) const { return down_(ops::relu(up_(x))); }

 private:
  Linear<T> up_, down_;
};

}  // namespace apm
