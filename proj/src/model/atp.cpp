#include "apm/model/atp.hpp"

#include <algorithm>

namespace apm {

template <typename T>
TextPromptBank<T>::TextPromptBank(ParameterStore<T>& store, const std::string& name, std::size_t N,
                                  std::size_t K, std::size_t C, Rng& rng) {
  context = store.add(name + ".context", normal_tensor<T>({N, C}, 0.02, rng));
  class_tokens = store.add(name + ".class_tokens", normal_tensor<T>({K, C}, 1.0, rng));
}

template <typename T>
Var<T> assemble_prompts(const TextPromptBank<T>& bank) {
  const std::size_t K = bank.actions();
  const std::size_t N = bank.context_tokens();
  const std::size_t C = bank.context.shape()[1];
  std::vector<Var<T>> sequences;
  sequences.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    sequences.push_back(ops::concat<T>({bank.context, ops::slice(bank.class_tokens, 0, k, k + 1)}, 0));
  }
  return ops::reshape(ops::concat(sequences, 0), {K, N + 1, C});
}

template <typename T>
TextEncoder<T>::TextEncoder(ParameterStore<T>& store, const std::string& name, std::size_t sequence,
                            std::size_t C, int layers, Rng& rng) {
  constexpr auto frozen = ParamKind::frozen;
  position_ = store.add(name + ".position", normal_tensor<T>({sequence, C}, 0.1, rng), frozen);
  for (int l = 0; l < layers; ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    Layer layer;
    layer.attn_norm = LayerNorm<T>(store, prefix + ".attn_norm", C, frozen);
    layer.attn = Attention<T>(store, prefix + ".attn", C, rng, frozen);
    layer.ffn_norm = LayerNorm<T>(store, prefix + ".ffn_norm", C, frozen);
    layer.ffn = FeedForward<T>(store, prefix + ".ffn", C, 2 * C, rng, frozen);
    layers_.push_back(std::move(layer));
  }
  final_norm_ = LayerNorm<T>(store, name + ".final_norm", C, frozen);
  projection_ = Linear<T>(store, name + ".projection", C, C, rng, false);
}

template <typename T>
Var<T> TextEncoder<T>::operator()(const Var<T>& prompts) {
  ops::detail::require_rank(prompts, 3, "encode_text");
  const std::size_t K = prompts.shape()[0];
  const std::size_t S = prompts.shape()[1];
  const std::size_t C = prompts.shape()[2];
  if (position_.shape() != Shape{S, C}) {
    throw DimensionError("encode_text: prompt sequences " + shape_string({S, C}) +
                         " do not match encoder " + shape_string(position_.shape()));
  }
  ++calls_;
  std::vector<Var<T>> rows;
  rows.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Var<T> x = ops::add(ops::reshape(ops::slice(prompts, 0, k, k + 1), {S, C}), position_);
    for (const auto& layer : layers_) {
      Var<T> h = layer.attn_norm(x);
      x = ops::add(x, layer.attn(h, h));
      x = ops::add(x, layer.ffn(layer.ffn_norm(x)));
    }
    rows.push_back(ops::slice(final_norm_(x), 0, S - 1, S));
  }
  return projection_(ops::concat(rows, 0));
}

template <typename T>
ActionProjector<T>::ActionProjector(ParameterStore<T>& store, const std::string& name, ProjectorKind kind,
                                    int blocks, std::size_t C, Rng& rng) {
  if (kind == ProjectorKind::tcn) {
    for (int b = 0; b < blocks; ++b) {
      convs_.emplace_back(store, name + ".block" + std::to_string(b), C, C, 3, 1, rng, true);
    }
  }
  out_ = Linear<T>(store, name + ".out", C, C, rng);
}

template <typename T>
Var<T> ActionProjector<T>::operator()(const Var<T>& features) const {
  ops::detail::require_rank(features, 2, "action_projector");
  if (features.shape()[0] < receptive_field()) {
    throw SequenceTooShortError("action projector needs at least " + std::to_string(receptive_field()) +
                                " frames, got " + std::to_string(features.shape()[0]));
  }
  Var<T> x = features;
  for (const auto& conv : convs_) {
    const std::size_t len = x.shape()[0];
    x = ops::add(ops::slice(x, 0, 1, len - 1), ops::relu(conv(x)));
  }
  return out_(ops::mean_rows(x));
}

template <typename T>
Var<T> first_order_motion(const Var<T>& z0) {
  ops::detail::require_rank(z0, 2, "first_order_motion");
  const std::size_t F = z0.shape()[0];
  if (F < 2) throw SequenceTooShortError("first_order_motion needs F >= 2, got " + std::to_string(F));
  return ops::sub(ops::slice(z0, 0, 1, F), ops::slice(z0, 0, 0, F - 1));
}

template <typename T>
PoseToText<T>::PoseToText(ParameterStore<T>& store, const std::string& name, std::size_t C, Rng& rng)
    : attn_(store, name, C, rng) {
  beta_ = store.add(name + ".beta", Tensor<T>({1}, T{0}));
}

template <typename T>
Var<T> PoseToText<T>::operator()(const Var<T>& t, const Var<T>& z0) const {
  Var<T> z_bar = ops::concat<T>({z0, first_order_motion(z0)}, 0);
  return ops::add(t, ops::mul_scalar(attn_(t, z_bar), beta_));
}

template <typename T>
Var<T> classify(const Var<T>& t_bar, const Var<T>& a, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature tau must be positive");
  return ops::softmax(ops::scale(ops::cosine_rows(t_bar, a), static_cast<T>(1.0 / tau)), 1);
}

template <typename T>
std::size_t argmax(const Tensor<T>& y) {
  const auto d = y.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

#define APM_INSTANTIATE(T)                                                          \
  template struct TextPromptBank<T>;                                                \
  template Var<T> assemble_prompts(const TextPromptBank<T>&);                       \
  template class TextEncoder<T>;                                                    \
  template class ActionProjector<T>;                                                \
  template Var<T> first_order_motion(const Var<T>&);                                \
  template class PoseToText<T>;                                                     \
  template Var<T> classify(const Var<T>&, const Var<T>&, double);                   \
  template std::size_t argmax(const Tensor<T>&);

APM_INSTANTIATE(float)
APM_INSTANTIATE(double)
#undef APM_INSTANTIATE

}  // namespace apm
