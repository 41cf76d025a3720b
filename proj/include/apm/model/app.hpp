#pragma once

// Action-specific pose prompts: per-action prompt bank, label-conditioned
// selection and transformer-decoder refinement of the final pose feature.

#include <vector>

#include "apm/core/layers.hpp"

namespace apm {

/// p[k] for 0 ≤ k < K as an [L×C] slice of the [K×L×C] bank.
template <typename T>
Var<T> select_prompts(const Var<T>& bank, std::size_t k);

/// Post-norm decoder block: self-attention, cross-attention over the
/// prompts, feed-forward; each sublayer is residual then LayerNorm.
template <typename T>
class DecoderBlock {
 public:
  DecoderBlock() = default;
  DecoderBlock(ParameterStore<T>& store, const std::string& name, std::size_t C, std::size_t hidden,
               Rng& rng);

  Var<T> operator()(const Var<T>& query, const Var<T>& prompts) const;

 private:
  Attention<T> self_attn_, cross_attn_;
  FeedForward<T> ffn_;
  LayerNorm<T> norm1_, norm2_, norm3_;
};

template <typename T>
class PosePrompts {
 public:
  PosePrompts() = default;
  PosePrompts(ParameterStore<T>& store, const std::string& name, std::size_t K, std::size_t L,
              std::size_t C, int layers, int ffn_multiplier, Rng& rng);

  /// z̄d = zd + γ ⊙ Decoder(zd, p[k]).
  Var<T> refine(const Var<T>& zd, std::size_t k) const;

  const Var<T>& bank() const { return bank_; }
  const Var<T>& gamma() const { return gamma_; }

 private:
  Var<T> bank_;
  Var<T> gamma_;
  std::vector<DecoderBlock<T>> blocks_;
};

/// Decoder refinement plus the γ-scaled residual on explicit parameters.
template <typename T>
Var<T> app_refine(const Var<T>& zd, const Var<T>& p_hat, const Var<T>& gamma,
                  const std::vector<DecoderBlock<T>>& blocks);

}  // namespace apm
