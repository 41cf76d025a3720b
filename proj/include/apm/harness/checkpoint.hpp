#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apm/core/adam.hpp"
#include "apm/core/parameters.hpp"

namespace apm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct SavedParameter {
  std::string name;
  ParamKind kind = ParamKind::trainable;
  Tensor<float> value;

  bool operator==(const SavedParameter&) const = default;
};

struct SavedOptimizer {
  std::uint64_t steps = 0;
  double lr = 0.0;
  std::map<std::string, AdamMoments<float>> moments;
};

struct Checkpoint {
  std::string config_text;
  int epoch = 0;
  double best_p1 = 0.0;
  std::vector<SavedParameter> parameters;
  SavedOptimizer optimizer;
  /// Text embeddings t [K×C] saved for inference (text branch only).
  std::optional<Tensor<float>> text_embeddings;
};

std::vector<SavedParameter> capture_parameters(const ParameterStore<float>& store);

/// Writes saved values into a store with the same names and shapes. The
/// first missing name or mismatched shape raises ConfigError naming it.
void restore_parameters(const std::vector<SavedParameter>& saved, ParameterStore<float>& store);

SavedOptimizer capture_optimizer(const Adam<float>& adam);
void restore_optimizer(const SavedOptimizer& saved, Adam<float>& adam);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Rejects bad magic, unknown versions, truncation and trailing bytes with a
/// FormatError naming the parameter being read.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Precomputed text embeddings: `<stem>.bin` holds the [K×C] tensor and
/// `<stem>.txt` names the actions in row order.
void save_text_embeddings(const std::string& stem, const Tensor<float>& t, const std::vector<std::string>& actions);
/// Loads and reorders rows to match `actions`; unknown or missing names throw.
Tensor<float> load_text_embeddings(const std::string& stem, const std::vector<std::string>& actions);

}  // namespace apm
