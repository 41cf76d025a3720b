#include "apm/model/model_config.hpp"

#include "apm/core/errors.hpp"

namespace apm {

const char* to_string(ActionBranch v) {
  switch (v) {
    case ActionBranch::none: return "none";
    case ActionBranch::label: return "label";
    case ActionBranch::text: return "text";
  }
  return "?";
}

const char* to_string(ProjectorKind v) { return v == ProjectorKind::tcn ? "tcn" : "pool"; }

const char* to_string(TextSource v) {
  switch (v) {
    case TextSource::prompt: return "prompt";
    case TextSource::learnable: return "learnable";
    case TextSource::file: return "file";
  }
  return "?";
}

ActionBranch parse_action_branch(const std::string& s) {
  if (s == "none") return ActionBranch::none;
  if (s == "label") return ActionBranch::label;
  if (s == "text") return ActionBranch::text;
  throw ConfigError("unknown action branch '" + s + "' (expected none, label or text)");
}

ProjectorKind parse_projector_kind(const std::string& s) {
  if (s == "tcn") return ProjectorKind::tcn;
  if (s == "pool") return ProjectorKind::pool;
  throw ConfigError("unknown projector '" + s + "' (expected tcn or pool)");
}

TextSource parse_text_source(const std::string& s) {
  if (s == "prompt") return TextSource::prompt;
  if (s == "learnable") return TextSource::learnable;
  if (s == "file") return TextSource::file;
  throw ConfigError("unknown text source '" + s + "' (expected prompt, learnable or file)");
}

int encoder_blocks_for(int frames, int kernel_width) {
  if (kernel_width < 2 || kernel_width % 2 == 0) {
    throw ConfigError("encoder kernel width must be odd and at least 3");
  }
  int blocks = 0;
  long long field = 1;
  while (field < frames) {
    field *= kernel_width;
    ++blocks;
  }
  if (field != frames || blocks < 1) {
    throw ConfigError("F=" + std::to_string(frames) + " is not a receptive field of a width-" +
                      std::to_string(kernel_width) + " dilated stack (need width^blocks)");
  }
  return blocks;
}

void validate(const ModelConfig& c) {
  if (c.joints < 1 || c.actions < 1) throw ConfigError("model needs positive J and K");
  if (c.encoder.channels < 1) throw ConfigError("encoder channels must be positive");
  if (c.encoder.dropout < 0.0 || c.encoder.dropout >= 1.0) {
    throw ConfigError("encoder dropout must lie in [0, 1)");
  }
  const int blocks = encoder_blocks_for(c.frames, c.encoder.kernel_width);
  if (c.atp.branch != ActionBranch::none) {
    if (c.atp.tap_layer < 1 || c.atp.tap_layer > blocks) {
      throw ConfigError("tap layer " + std::to_string(c.atp.tap_layer) + " outside 1.." +
                        std::to_string(blocks));
    }
    if (c.atp.projector_blocks < 0) throw ConfigError("projector blocks must be non-negative");
  }
  if (c.atp.branch == ActionBranch::text) {
    if (!(c.atp.tau > 0.0)) throw ConfigError("temperature tau must be positive");
    if (c.atp.context_tokens < 1) throw ConfigError("need at least one context token");
    if (c.atp.text_layers < 1) throw ConfigError("text encoder needs at least one layer");
    if (c.atp.text_source == TextSource::file && c.atp.embeddings_path.empty()) {
      throw ConfigError("text_source = file requires embeddings_path");
    }
  }
  if (c.app.enabled) {
    if (c.app.prompts < 1 || c.app.layers < 1 || c.app.ffn_multiplier < 1) {
      throw ConfigError("APP needs positive prompt count, layer count and ffn multiplier");
    }
    if (c.atp.branch == ActionBranch::none) {
      throw ConfigError("pose prompts need an action branch to infer labels at inference");
    }
  }
}

}  // namespace apm
