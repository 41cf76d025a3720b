#include "apm/model/encoder.hpp"

namespace apm {

std::vector<std::size_t> temporal_tap_extents(int frames, int kernel_width) {
  const int blocks = encoder_blocks_for(frames, kernel_width);
  std::vector<std::size_t> extents{static_cast<std::size_t>(frames)};
  long long length = frames - (kernel_width - 1);
  long long dilation = 1;
  for (int b = 2; b <= blocks; ++b) {
    dilation *= kernel_width;
    length -= dilation * (kernel_width - 1);
    extents.push_back(static_cast<std::size_t>(length));
  }
  return extents;
}

template <typename T>
TemporalConvEncoder<T>::TemporalConvEncoder(ParameterStore<T>& store, const EncoderSettings& settings,
                                            int frames, int joints, Rng& rng)
    : settings_(settings),
      frames_(frames),
      joints_(joints),
      blocks_(encoder_blocks_for(frames, settings.kernel_width)),
      channels_(static_cast<std::size_t>(settings.channels)),
      dropout_rng_(rng.next_u64()) {
  const auto width = static_cast<std::size_t>(settings.kernel_width);
  input_ = Linear<T>(store, "encoder.input", static_cast<std::size_t>(2 * joints), channels_, rng);
  first_conv_ = Conv1d<T>(store, "encoder.block1.conv", channels_, channels_, width, 1, rng);
  first_norm_ = BatchNorm<T>(store, "encoder.block1.norm", channels_);
  std::size_t dilation = 1;
  for (int b = 2; b <= blocks_; ++b) {
    dilation *= width;
    const std::string name = "encoder.block" + std::to_string(b);
    Block block;
    block.conv = Conv1d<T>(store, name + ".conv", channels_, channels_, width, dilation, rng);
    block.conv_norm = BatchNorm<T>(store, name + ".conv_norm", channels_);
    block.pointwise = Linear<T>(store, name + ".pointwise", channels_, channels_, rng, false);
    block.pointwise_norm = BatchNorm<T>(store, name + ".pointwise_norm", channels_);
    stack_.push_back(std::move(block));
  }
}

template <typename T>
std::vector<EncoderOutput<T>> TemporalConvEncoder<T>::forward(const std::vector<Var<T>>& inputs,
                                                              bool training) {
  const Shape expected{static_cast<std::size_t>(frames_), static_cast<std::size_t>(joints_), 2};
  const std::size_t batch = inputs.size();
  const double p = settings_.dropout;
  const std::size_t pad = static_cast<std::size_t>(settings_.kernel_width - 1) / 2;
  const auto F = static_cast<std::size_t>(frames_);

  // Input projection and block 1 run with replicated edge frames so the
  // shallow tap keeps all F frames. The main path continues from its centre
  // rows, which equal an unpadded convolution of the same input.
  std::vector<Var<T>> projected(batch), first(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    if (inputs[i].shape() != expected) {
      throw ConfigError("encoder expects input " + shape_string(expected) + ", got " +
                        shape_string(inputs[i].shape()));
    }
    projected[i] = input_(ops::reshape(inputs[i], {F, static_cast<std::size_t>(2 * joints_)}));
    std::vector<Var<T>> framed;
    for (std::size_t k = 0; k < pad; ++k) framed.push_back(ops::slice(projected[i], 0, 0, 1));
    framed.push_back(projected[i]);
    for (std::size_t k = 0; k < pad; ++k) framed.push_back(ops::slice(projected[i], 0, F - 1, F));
    first[i] = first_conv_(ops::concat(framed, 0));
  }
  first = batch_norm_group(first_norm_, first, training);

  std::vector<EncoderOutput<T>> out(batch);
  std::vector<Var<T>> main(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    Var<T> z0 = ops::add(projected[i], ops::dropout(ops::relu(first[i]), p, training, dropout_rng_));
    out[i].taps.push_back(z0);
    main[i] = ops::slice(z0, 0, pad, F - pad);
  }

  for (auto& block : stack_) {
    std::vector<Var<T>> conv(batch);
    for (std::size_t i = 0; i < batch; ++i) conv[i] = block.conv(main[i]);
    conv = batch_norm_group(block.conv_norm, conv, training);
    std::vector<Var<T>> point(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      point[i] = block.pointwise(ops::dropout(ops::relu(conv[i]), p, training, dropout_rng_));
    }
    point = batch_norm_group(block.pointwise_norm, point, training);
    const std::size_t half = block.conv.span() / 2;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t len = main[i].shape()[0];
      Var<T> residual = ops::slice(main[i], 0, half, len - half);
      main[i] = ops::add(residual, ops::dropout(ops::relu(point[i]), p, training, dropout_rng_));
      out[i].taps.push_back(main[i]);
    }
  }
  return out;
}

template class TemporalConvEncoder<float>;
template class TemporalConvEncoder<double>;

}  // namespace apm
