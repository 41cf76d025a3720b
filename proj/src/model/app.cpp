#include "apm/model/app.hpp"

namespace apm {

template <typename T>
Var<T> select_prompts(const Var<T>& bank, std::size_t k) {
  ops::detail::require_rank(bank, 3, "select_prompts");
  const std::size_t K = bank.shape()[0];
  if (k >= K) {
    throw ValidationError("action label " + std::to_string(k) + " outside 0.." + std::to_string(K - 1));
  }
  return ops::reshape(ops::slice(bank, 0, k, k + 1), {bank.shape()[1], bank.shape()[2]});
}

template <typename T>
DecoderBlock<T>::DecoderBlock(ParameterStore<T>& store, const std::string& name, std::size_t C,
                              std::size_t hidden, Rng& rng)
    : self_attn_(store, name + ".self_attn", C, rng),
      cross_attn_(store, name + ".cross_attn", C, rng),
      ffn_(store, name + ".ffn", C, hidden, rng),
      norm1_(store, name + ".norm1", C),
      norm2_(store, name + ".norm2", C),
      norm3_(store, name + ".norm3", C) {}

template <typename T>
Var<T> DecoderBlock<T>::operator()(const Var<T>& query, const Var<T>& prompts) const {
  Var<T> x = norm1_(ops::add(query, self_attn_(query, query)));
  x = norm2_(ops::add(x, cross_attn_(x, prompts)));
  return norm3_(ops::add(x, ffn_(x)));
}

template <typename T>
Var<T> app_refine(const Var<T>& zd, const Var<T>& p_hat, const Var<T>& gamma,
                  const std::vector<DecoderBlock<T>>& blocks) {
  if (zd.shape().size() != 2 || zd.shape()[0] != 1 || p_hat.shape().size() != 2 ||
      p_hat.shape()[1] != zd.shape()[1] || gamma.shape() != Shape{zd.shape()[1]}) {
    throw DimensionError("app_refine: zd " + shape_string(zd.shape()) + ", prompts " +
                         shape_string(p_hat.shape()) + ", gamma " + shape_string(gamma.shape()));
  }
  Var<T> z_hat = zd;
  for (const auto& block : blocks) z_hat = block(z_hat, p_hat);
  return ops::add(zd, ops::mul_row(z_hat, gamma));
}

template <typename T>
PosePrompts<T>::PosePrompts(ParameterStore<T>& store, const std::string& name, std::size_t K,
                            std::size_t L, std::size_t C, int layers, int ffn_multiplier, Rng& rng) {
  bank_ = store.add(name + ".prompts", normal_tensor<T>({K, L, C}, 1.0, rng));
  gamma_ = store.add(name + ".gamma", Tensor<T>({C}, T{0}));
  for (int d = 0; d < layers; ++d) {
    blocks_.emplace_back(store, name + ".decoder" + std::to_string(d), C,
                         C * static_cast<std::size_t>(ffn_multiplier), rng);
  }
}

template <typename T>
Var<T> PosePrompts<T>::refine(const Var<T>& zd, std::size_t k) const {
  return app_refine(zd, select_prompts(bank_, k), gamma_, blocks_);
}

#define APM_INSTANTIATE(T)                                                                   \
  template Var<T> select_prompts(const Var<T>&, std::size_t);                                \
  template class DecoderBlock<T>;                                                            \
  template class PosePrompts<T>;                                                             \
  template Var<T> app_refine(const Var<T>&, const Var<T>&, const Var<T>&,                    \
                             const std::vector<DecoderBlock<T>>&);

APM_INSTANTIATE(float)
APM_INSTANTIATE(double)
#undef APM_INSTANTIATE

}  // namespace apm
