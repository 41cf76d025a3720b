#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apm/core/tensor.hpp"

namespace apm::data {

inline constexpr int kDatasetVersion = 1;

/// One training sample: a 2-D joint sequence [F×J×2] in normalized image
/// coordinates, the root-relative 3-D pose of its center frame [J×3] in
/// millimeters, and the action label.
struct PoseSample {
  Tensor<float> input2d;
  Tensor<float> target3d;
  int action = 0;
};

struct DatasetManifest {
  int version = kDatasetVersion;
  int actions = 0;  // K
  int frames = 0;   // F
  int joints = 0;   // J
  std::uint64_t seed = 0;
  std::vector<std::string> action_names;
  std::vector<std::string> hard_actions;
  std::size_t train_count = 0;
  std::size_t eval_count = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<PoseSample> train;
  std::vector<PoseSample> eval;

  /// Indices of manifest.hard_actions within action_names.
  std::vector<int> hard_action_indices() const;
  int action_index(const std::string& name) const;
};

/// Checks manifest consistency, sample shapes, label range and the
/// root-relative target invariant. Throws ValidationError.
void validate(const Dataset& dataset);

std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& text, const std::string& origin);

/// Directory layout: manifest.txt, train.bin, eval.bin.
void save_dataset(const Dataset& dataset, const std::string& directory);
Dataset load_dataset(const std::string& directory);

std::vector<std::uint8_t> encode_samples(const std::vector<PoseSample>& samples);
std::vector<PoseSample> decode_samples(const std::vector<std::uint8_t>& bytes);

}  // namespace apm::data
