#pragma once

#include <vector>

#include "apm/core/layers.hpp"
#include "apm/model/model_config.hpp"

namespace apm {

/// Per-sample encoder taps. taps[0] is the shallow feature Z⁰ [F×C];
/// taps.back() is the final feature Z^d [1×C].
template <typename T>
struct EncoderOutput {
  std::vector<Var<T>> taps;

  const Var<T>& z0() const { return taps.front(); }
  const Var<T>& zd() const { return taps.back(); }
};

/// 1-based tap lookup; layer 1 is Z⁰ and layer == blocks is Z^d.
template <typename T>
const Var<T>& tap(const EncoderOutput<T>& output, int layer) {
  if (layer < 1 || layer > static_cast<int>(output.taps.size())) {
    throw ConfigError("tap layer " + std::to_string(layer) + " outside 1.." +
                      std::to_string(output.taps.size()));
  }
  return output.taps[static_cast<std::size_t>(layer - 1)];
}

/// Any 2-D-to-3-D sequence encoder that can report shallow and final taps.
template <typename T>
class SequenceEncoder {
 public:
  virtual ~SequenceEncoder() = default;

  /// inputs: one [F×J×2] tensor per sample. Samples are processed as one
  /// batch (normalization statistics are shared across them).
  virtual std::vector<EncoderOutput<T>> forward(const std::vector<Var<T>>& inputs, bool training) = 0;
  virtual int blocks() const = 0;
  virtual std::size_t channels() const = 0;
};

/// Time extent of every tap for a width-w, ×w-dilation stack over `frames`.
/// Layer 1 keeps the full length (same-length framing); deeper layers follow
/// the valid-convolution reduction down to 1.
std::vector<std::size_t> temporal_tap_extents(int frames, int kernel_width);

/// Temporal-convolution encoder in the VPose style: per-frame input
/// projection, then one block per dilation level (1, w, w², ...) so the
/// receptive field equals F exactly and Z^d has time extent 1.
template <typename T>
class TemporalConvEncoder final : public SequenceEncoder<T> {
 public:
  TemporalConvEncoder(ParameterStore<T>& store, const EncoderSettings& settings, int frames,
                      int joints, Rng& rng);

  std::vector<EncoderOutput<T>> forward(const std::vector<Var<T>>& inputs, bool training) override;
  int blocks() const override { return blocks_; }
  std::size_t channels() const override { return channels_; }

 private:
  struct Block {
    Conv1d<T> conv;
    BatchNorm<T> conv_norm;
    Linear<T> pointwise;
    BatchNorm<T> pointwise_norm;
  };

  EncoderSettings settings_;
  int frames_;
  int joints_;
  int blocks_;
  std::size_t channels_;
  Linear<T> input_;
  Conv1d<T> first_conv_;
  BatchNorm<T> first_norm_;
  std::vector<Block> stack_;
  Rng dropout_rng_;
};

/// Concatenates per-sample rows, normalizes them as one batch, and splits
/// the result back into per-sample tensors.
template <typename T>
std::vector<Var<T>> batch_norm_group(BatchNorm<T>& norm, const std::vector<Var<T>>& xs, bool training) {
  if (xs.size() == 1) return {norm(xs.front(), training)};
  Var<T> joined = norm(ops::concat(xs, 0), training);
  std::vector<Var<T>> out;
  out.reserve(xs.size());
  std::size_t row = 0;
  for (const auto& x : xs) {
    const std::size_t n = x.shape()[0];
    out.push_back(ops::slice(joined, 0, row, row + n));
    row += n;
  }
  return out;
}

}  // namespace apm
