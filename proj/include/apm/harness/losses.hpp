#pragma once

#include <vector>

#include "apm/core/ops.hpp"

namespace apm {

/// Mean over the batch of the per-joint mean Euclidean error.
/// pred and gt: [B×J×3] (or [J×3] for a single sample).
template <typename T>
Var<T> pose_loss(const Var<T>& pred, const Tensor<T>& gt) {
  if (pred.shape() != gt.shape() || pred.shape().back() != 3) {
    throw DimensionError("pose_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(gt.shape()));
  }
  const std::size_t rows = pred.value().size() / 3;
  Var<T> diff = ops::sub(pred, Var<T>::constant(gt));
  return ops::mean(ops::row_norm(ops::reshape(diff, {rows, 3})));
}

/// −log y[k] for one distribution y over K actions.
template <typename T>
Var<T> action_loss(const Var<T>& y, int k) {
  const auto K = y.value().size();
  if (k < 0 || static_cast<std::size_t>(k) >= K) {
    throw ValidationError("action_loss: label " + std::to_string(k) + " outside 0.." + std::to_string(K - 1));
  }
  return ops::scale(ops::log(ops::take(y, static_cast<std::size_t>(k))), T{-1});
}

/// Batch mean of action_loss.
template <typename T>
Var<T> mean_action_loss(const std::vector<Var<T>>& ys, const std::vector<int>& labels) {
  if (ys.empty() || ys.size() != labels.size()) {
    throw ValidationError("mean_action_loss: need one label per distribution");
  }
  std::vector<Var<T>> terms;
  terms.reserve(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) terms.push_back(action_loss(ys[i], labels[i]));
  return ops::mean(ops::concat(terms, 0));
}

/// L = L_P + λ·L_A.
template <typename T>
Var<T> total_loss(const Var<T>& lp, const Var<T>& la, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  return ops::add(lp, ops::scale(la, static_cast<T>(lambda)));
}

inline double total_loss(double lp, double la, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  return lp + lambda * la;
}

}  // namespace apm
