#pragma once

#include <cmath>
#include <map>
#include <string>

#include "apm/core/parameters.hpp"

namespace apm {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay = 0.98;  // multiplied into the learning rate once per epoch
};

template <typename T>
struct AdamMoments {
  Tensor<T> first;
  Tensor<T> second;
};

/// Adam with bias correction. Moments exist only for trainable parameters;
/// frozen parameters and buffers are never touched.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config), lr_(config.learning_rate) {}

  void step(ParameterStore<T>& store) {
    for (const auto& p : store.all()) {
      if (p.trainable() && !p.var.has_grad()) {
        throw TrainingError("adam: trainable parameter '" + p.name + "' has no gradient");
      }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (auto& p : store.all()) {
      if (!p.trainable()) continue;
      auto [it, inserted] = moments_.try_emplace(p.name);
      if (inserted) {
        it->second.first = Tensor<T>(p.var.shape());
        it->second.second = Tensor<T>(p.var.shape());
      }
      auto& m = it->second.first;
      auto& v = it->second.second;
      const auto& g = p.var.grad();
      auto& w = p.var.mutable_value();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = static_cast<T>(config_.beta1 * m[i] + (1.0 - config_.beta1) * gi);
        v[i] = static_cast<T>(config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi);
        const double m_hat = static_cast<double>(m[i]) / c1;
        const double v_hat = static_cast<double>(v[i]) / c2;
        w[i] = static_cast<T>(w[i] - lr_ * m_hat / (std::sqrt(v_hat) + config_.epsilon));
      }
    }
  }

  void decay_learning_rate() { lr_ *= config_.decay; }

  double learning_rate() const noexcept { return lr_; }
  std::size_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

  const std::map<std::string, AdamMoments<T>>& moments() const noexcept { return moments_; }

  void restore(std::size_t steps, double lr, std::map<std::string, AdamMoments<T>> moments) {
    steps_ = steps;
    lr_ = lr;
    moments_ = std::move(moments);
  }

 private:
  AdamConfig config_;
  double lr_;
  std::size_t steps_ = 0;
  std::map<std::string, AdamMoments<T>> moments_;
};

}  // namespace apm
