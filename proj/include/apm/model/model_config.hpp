#pragma once

#include <string>

namespace apm {

/// Which action-recognition branch sits on the shallow encoder features.
/// none: pose only. label: action projector + linear classifier (one-hot
/// multi-task). text: learnable text prompts aligned with the action feature.
enum class ActionBranch { none, label, text };

enum class ProjectorKind { tcn, pool };

/// Where the K text embeddings come from. prompt: context + class tokens
/// through the frozen text encoder. learnable: K free embedding vectors.
/// file: fixed precomputed embeddings.
enum class TextSource { prompt, learnable, file };

const char* to_string(ActionBranch v);
const char* to_string(ProjectorKind v);
const char* to_string(TextSource v);
ActionBranch parse_action_branch(const std::string& s);
ProjectorKind parse_projector_kind(const std::string& s);
TextSource parse_text_source(const std::string& s);

struct EncoderSettings {
  int channels = 16;
  int kernel_width = 3;
  double dropout = 0.0;
};

struct AtpSettings {
  ActionBranch branch = ActionBranch::text;
  int context_tokens = 16;
  double tau = 0.07;
  ProjectorKind projector = ProjectorKind::tcn;
  int projector_blocks = 2;
  int tap_layer = 1;
  bool pose_to_text = true;
  TextSource text_source = TextSource::prompt;
  std::string embeddings_path;
  int text_layers = 2;
};

struct AppSettings {
  bool enabled = true;
  int prompts = 8;
  int layers = 1;
  int ffn_multiplier = 2;
};

struct ModelConfig {
  int frames = 27;
  int joints = 8;
  int actions = 4;
  EncoderSettings encoder;
  AtpSettings atp;
  AppSettings app;
};

/// Number of encoder blocks whose receptive field equals `frames`
/// (frames == width^blocks). Throws ConfigError otherwise.
int encoder_blocks_for(int frames, int kernel_width);

/// Checks cross-field consistency (receptive field, tap range, APP needing an
/// action branch, tau > 0, ...). Throws ConfigError.
void validate(const ModelConfig& config);

}  // namespace apm
