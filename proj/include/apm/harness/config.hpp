#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apm/data/synthetic.hpp"
#include "apm/model/model_config.hpp"

namespace apm {

struct DataSettings {
  /// Dataset directory; when empty, data is generated in memory from the
  /// synthetic settings below.
  std::string dir;
  data::SyntheticConfig synthetic;
  /// Overrides the manifest's hard actions for P3 when non-empty.
  std::vector<std::string> hard_actions;
  /// Train on the first n training samples only (0 keeps all).
  int train_limit = 0;
  /// Evaluate on the training samples actually used (overfit mode).
  bool eval_on_train = false;
};

struct TrainSettings {
  int batch_size = 16;
  int epochs = 60;
  double lr = 1e-3;
  double lr_decay = 0.98;
  double lambda = 0.1;
  std::uint64_t seed = 1;
  /// Stop after this many optimizer steps (0 = no limit).
  long long max_steps = 0;
  bool gt_labels_at_eval = false;
};

struct ExperimentConfig {
  DataSettings data;
  ModelConfig model;
  TrainSettings train;
};

/// Applies `key = value` text on top of `base`. Unknown sections or keys
/// raise ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                              ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Every key with its current value; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

/// Cross-field checks beyond the model: batch size, epochs, lambda ≥ 0, ...
void validate(const ExperimentConfig& config);

}  // namespace apm
