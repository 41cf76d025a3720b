#pragma once

// Action-related text prompts: prompt assembly, the frozen text encoder,
// the action projector over shallow pose features, pose-to-text velocity
// enrichment and cosine classification.

#include <vector>

#include "apm/core/layers.hpp"
#include "apm/model/model_config.hpp"

namespace apm {

/// Learnable prompt vectors: N context rows shared by every class plus one
/// class token per action.
template <typename T>
struct TextPromptBank {
  Var<T> context;       // [N×C]
  Var<T> class_tokens;  // [K×C]

  TextPromptBank() = default;
  TextPromptBank(ParameterStore<T>& store, const std::string& name, std::size_t N, std::size_t K,
                 std::size_t C, Rng& rng);

  std::size_t context_tokens() const { return context.shape()[0]; }
  std::size_t actions() const { return class_tokens.shape()[0]; }
};

/// [K×(N+1)×C]: sequence k is the shared context followed by class token k.
template <typename T>
Var<T> assemble_prompts(const TextPromptBank<T>& bank);

/// Frozen pre-norm transformer over prompt sequences. Only the final C×C
/// projection is trainable.
template <typename T>
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(ParameterStore<T>& store, const std::string& name, std::size_t sequence, std::size_t C,
              int layers, Rng& rng);

  /// V: [K×S×C] → t: [K×C], taken at the last (class-token) position.
  Var<T> operator()(const Var<T>& prompts);

  /// Number of forward calls so far; lets callers prove a path never
  /// touched the encoder.
  std::size_t calls() const { return calls_; }

 private:
  struct Layer {
    LayerNorm<T> attn_norm;
    Attention<T> attn;
    LayerNorm<T> ffn_norm;
    FeedForward<T> ffn;
  };

  Var<T> position_;
  std::vector<Layer> layers_;
  LayerNorm<T> final_norm_;
  Linear<T> projection_;
  std::size_t calls_ = 0;
};

/// Pose features of one tap → action feature a [1×C]. The tcn variant runs
/// width-3, dilation-1 valid convolution blocks before pooling; pool skips
/// them.
template <typename T>
class ActionProjector {
 public:
  ActionProjector() = default;
  ActionProjector(ParameterStore<T>& store, const std::string& name, ProjectorKind kind, int blocks,
                  std::size_t C, Rng& rng);

  Var<T> operator()(const Var<T>& features) const;

  /// Minimum input length accepted by operator().
  std::size_t receptive_field() const { return 1 + 2 * convs_.size(); }

 private:
  std::vector<Conv1d<T>> convs_;
  Linear<T> out_;
};

/// Row i = z0[i+1] − z0[i]; [F×C] → [(F−1)×C].
template <typename T>
Var<T> first_order_motion(const Var<T>& z0);

/// t̄ = t + β·CrossAttn(t, concat(z0, Δz0)), β a learnable scalar starting at 0.
template <typename T>
class PoseToText {
 public:
  PoseToText() = default;
  PoseToText(ParameterStore<T>& store, const std::string& name, std::size_t C, Rng& rng);

  Var<T> operator()(const Var<T>& t, const Var<T>& z0) const;

  const Var<T>& beta() const { return beta_; }

 private:
  Attention<T> attn_;
  Var<T> beta_;
};

/// y_k = softmax_k(cos(t̄_k, a) / τ) as a [1×K] row.
template <typename T>
Var<T> classify(const Var<T>& t_bar, const Var<T>& a, double tau);

/// Index of the largest entry; ties resolve to the lowest index.
template <typename T>
std::size_t argmax(const Tensor<T>& y);

}  // namespace apm
