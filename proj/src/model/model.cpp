#include "apm/model/model.hpp"

namespace apm {

template <typename T>
ApmModel<T>::ApmModel(const ModelConfig& config, std::uint64_t seed, std::optional<Tensor<T>> fixed_text)
    : config_(config) {
  validate(config_);
  const auto C = static_cast<std::size_t>(config_.encoder.channels);
  const auto K = static_cast<std::size_t>(config_.actions);
  const auto J = static_cast<std::size_t>(config_.joints);

  Rng encoder_rng(derive_seed(seed, "encoder"));
  encoder_ = std::make_unique<TemporalConvEncoder<T>>(store_, config_.encoder, config_.frames,
                                                      config_.joints, encoder_rng);
  Rng head_rng(derive_seed(seed, "head"));
  head_ = Linear<T>(store_, "head", C, 3 * J, head_rng);
  target_mean_ = store_.add("head.target_mean", Tensor<T>({J, 3}, T{0}), ParamKind::buffer);
  target_scale_ = store_.add("head.target_scale", Tensor<T>({1}, T{1}), ParamKind::buffer);

  const auto& atp = config_.atp;
  if (atp.branch != ActionBranch::none) {
    Rng rng(derive_seed(seed, "atp"));
    projector_ = ActionProjector<T>(store_, "atp.projector", atp.projector, atp.projector_blocks, C, rng);
    if (atp.branch == ActionBranch::label) {
      label_head_ = Linear<T>(store_, "atp.label_head", C, K, rng);
    } else {
      switch (atp.text_source) {
        case TextSource::prompt: {
          const auto N = static_cast<std::size_t>(atp.context_tokens);
          prompts_.emplace(store_, "atp", N, K, C, rng);
          text_encoder_ = std::make_unique<TextEncoder<T>>(store_, "atp.text", N + 1, C, atp.text_layers, rng);
          break;
        }
        case TextSource::learnable:
          free_text_ = store_.add("atp.embeddings", normal_tensor<T>({K, C}, 1.0, rng));
          break;
        case TextSource::file:
          if (!fixed_text || fixed_text->shape() != Shape{K, C}) {
            throw ConfigError("text_source = file needs embeddings of shape " + shape_string({K, C}));
          }
          fixed_text_ = std::move(fixed_text);
          break;
      }
      if (atp.pose_to_text) pose_to_text_.emplace(store_, "atp.p2t", C, rng);
    }
  }

  if (config_.app.enabled) {
    Rng rng(derive_seed(seed, "app"));
    pose_prompts_.emplace(store_, "app", K, static_cast<std::size_t>(config_.app.prompts), C,
                          config_.app.layers, config_.app.ffn_multiplier, rng);
  }
}

template <typename T>
Var<T> ApmModel<T>::text_embeddings() {
  if (config_.atp.branch != ActionBranch::text) throw ConfigError("model has no text branch");
  if (text_encoder_) return (*text_encoder_)(assemble_prompts(*prompts_));
  if (free_text_.defined()) return free_text_;
  return Var<T>::constant(*fixed_text_);
}

template <typename T>
void ApmModel<T>::set_target_statistics(const Tensor<T>& mean, T scale) {
  mean.require_same_shape(target_mean_.value(), "set_target_statistics");
  if (!(scale > T{0})) throw ConfigError("target scale must be positive");
  target_mean_.mutable_value() = mean;
  target_scale_.mutable_value()[0] = scale;
}

template <typename T>
ForwardResult<T> ApmModel<T>::forward(const std::vector<Var<T>>& inputs, const std::vector<int>& labels,
                                      const ForwardOptions<T>& options) {
  if (options.select_with_labels && labels.size() != inputs.size()) {
    throw ValidationError("label-conditioned forward needs one label per sample");
  }
  const auto features = encoder_->forward(inputs, options.training);
  const auto J = static_cast<std::size_t>(config_.joints);
  const auto& atp = config_.atp;

  Var<T> t;
  if (atp.branch == ActionBranch::text) {
    t = options.text_embeddings ? Var<T>::constant(*options.text_embeddings) : text_embeddings();
  }

  ForwardResult<T> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& f = features[i];
    Var<T> y;
    if (atp.branch != ActionBranch::none) {
      Var<T> a = projector_(tap(f, atp.tap_layer));
      if (atp.branch == ActionBranch::label) {
        y = ops::softmax(label_head_(a), 1);
      } else {
        Var<T> t_bar = pose_to_text_ ? (*pose_to_text_)(t, f.z0()) : t;
        y = classify(t_bar, a, atp.tau);
      }
      out.probabilities.push_back(y);
    }

    Var<T> z = f.zd();
    int k = -1;
    if (pose_prompts_) {
      k = options.select_with_labels ? labels[i] : static_cast<int>(argmax(y.value()));
      if (k < 0 || k >= config_.actions) {
        throw ValidationError("action label " + std::to_string(k) + " outside 0.." +
                              std::to_string(config_.actions - 1));
      }
      z = pose_prompts_->refine(z, static_cast<std::size_t>(k));
    }
    out.selected.push_back(k);
    Var<T> normalized = ops::reshape(head_(z), {J, 3});
    out.poses.push_back(ops::add(ops::mul_scalar(normalized, target_scale_), target_mean_));
  }
  return out;
}

template class ApmModel<float>;
template class ApmModel<double>;

}  // namespace apm
