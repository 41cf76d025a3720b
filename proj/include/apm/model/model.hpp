#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "apm/model/app.hpp"
#include "apm/model/atp.hpp"
#include "apm/model/encoder.hpp"

namespace apm {

template <typename T>
struct ForwardOptions {
  bool training = false;
  /// Select pose prompts with the given labels instead of argmax(y).
  bool select_with_labels = false;
  /// Saved text embeddings t [K×C]; when set the text encoder is skipped.
  const Tensor<T>* text_embeddings = nullptr;
};

template <typename T>
struct ForwardResult {
  std::vector<Var<T>> poses;          // [J×3] per sample
  std::vector<Var<T>> probabilities;  // [1×K] per sample; empty without an action branch
  std::vector<int> selected;          // prompt slice used per sample; -1 without APP
};

/// Pose encoder + optional action branch (label or text prompts) + optional
/// pose prompts + linear output head.
///
/// Every submodule initializes from its own seed stream, so two models with
/// the same seed share encoder and head values whatever else is enabled.
template <typename T>
class ApmModel {
 public:
  ApmModel(const ModelConfig& config, std::uint64_t seed, std::optional<Tensor<T>> fixed_text = {});

  ApmModel(const ApmModel&) = delete;
  ApmModel& operator=(const ApmModel&) = delete;

  /// labels are required when options.select_with_labels is set.
  ForwardResult<T> forward(const std::vector<Var<T>>& inputs, const std::vector<int>& labels,
                           const ForwardOptions<T>& options);

  /// Current text embeddings t [K×C] (text branch only).
  Var<T> text_embeddings();

  /// Output de-normalization: pose = mean + scale · head(z). Stored as
  /// buffers; identity (0, 1) until set.
  void set_target_statistics(const Tensor<T>& mean, T scale);

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }
  std::size_t text_encoder_calls() const { return text_encoder_ ? text_encoder_->calls() : 0; }
  bool has_action_branch() const { return config_.atp.branch != ActionBranch::none; }

 private:
  ModelConfig config_;
  ParameterStore<T> store_;
  std::unique_ptr<TemporalConvEncoder<T>> encoder_;
  Linear<T> head_;
  Var<T> target_mean_;
  Var<T> target_scale_;

  // Action branch.
  ActionProjector<T> projector_;
  Linear<T> label_head_;
  std::optional<TextPromptBank<T>> prompts_;
  std::unique_ptr<TextEncoder<T>> text_encoder_;
  Var<T> free_text_;
  std::optional<Tensor<T>> fixed_text_;
  std::optional<PoseToText<T>> pose_to_text_;

  std::optional<PosePrompts<T>> pose_prompts_;
};

}  // namespace apm
