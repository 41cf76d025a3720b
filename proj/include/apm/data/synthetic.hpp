#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "apm/data/dataset.hpp"

namespace apm::data {

/// Sequence lengths whose receptive field a width-3, ×3-dilation stack covers exactly.
inline constexpr std::array<int, 4> kSupportedFrames{9, 27, 81, 243};

/// Throws ConfigError listing the supported lengths when `frames` is not one.
void require_supported_frames(int frames);

inline constexpr int kJointGroups = 4;

/// Procedural description of one action. Joint groups: 0 torso, 1 left arm,
/// 2 right arm, 3 legs.
struct ActionMotif {
  std::string name;
  std::vector<std::array<double, 3>> base_offset;  // per joint, mm, added to the rest pose
  std::array<double, kJointGroups> frequency{};     // Hz
  std::array<double, kJointGroups> amplitude{};     // mm, image-plane oscillation
  double depth_excursion = 0.0;                     // mm, out-of-plane oscillation
  double drift = 0.0;                               // mm/s, root translation along x
  double noise = 8.0;                               // mm, per-sample static joint jitter
  bool hard = false;
};

struct SyntheticConfig {
  int actions = 4;
  int frames = 27;
  int joints = 8;
  int train_per_action = 50;
  int eval_per_action = 20;
  std::uint64_t seed = 1;
  double fps = 25.0;
  double pixel_noise = 1.0;
  double image_width = 1000.0;
  double image_height = 1000.0;
  double pixels_per_mm = 0.25;
};

int joint_group(int joint);

/// Root-relative rest skeleton (mm) for an arbitrary joint count; joint 0 is the root.
std::vector<std::array<double, 3>> rest_skeleton(int joints);

/// Deterministic motifs for K actions over J joints. The last
/// max(1, round(K/5)) actions are flagged hard and carry a large depth excursion.
std::vector<ActionMotif> default_motifs(int actions, int joints);

Dataset generate_synthetic(const SyntheticConfig& config, const std::vector<ActionMotif>& motifs);
Dataset generate_synthetic(const SyntheticConfig& config);

/// Generates one sample from its own seed stream; exposed so callers can
/// reproduce any single sample independently of generation order.
PoseSample generate_sample(const SyntheticConfig& config, const ActionMotif& motif, int action,
                           std::uint64_t sample_seed);

}  // namespace apm::data
