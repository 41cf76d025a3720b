#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "apm/core/var.hpp"

namespace apm {

/// trainable: updated by the optimizer. frozen: participates in the forward
/// pass but never receives gradients. buffer: non-learned state (normalization
/// running statistics) mutated by the forward pass itself.
enum class ParamKind { trainable, frozen, buffer };

inline const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::trainable: return "trainable";
    case ParamKind::frozen: return "frozen";
    case ParamKind::buffer: return "buffer";
  }
  return "?";
}

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
  ParamKind kind = ParamKind::trainable;

  bool trainable() const noexcept { return kind == ParamKind::trainable; }
};

/// Ordered registry of named model state. Registration order is the
/// serialization order.
template <typename T>
class ParameterStore {
 public:
  Var<T> add(const std::string& name, Tensor<T> init, ParamKind kind = ParamKind::trainable) {
    if (index_.count(name)) throw ConfigError("parameter registered twice: " + name);
    index_.emplace(name, params_.size());
    params_.push_back({name, Var<T>::leaf(std::move(init), kind == ParamKind::trainable), kind});
    return params_.back().var;
  }

  const Parameter<T>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  const Parameter<T>& get(const std::string& name) const {
    const auto* p = find(name);
    if (!p) throw ConfigError("unknown parameter: " + name);
    return *p;
  }

  std::vector<Parameter<T>>& all() noexcept { return params_; }
  const std::vector<Parameter<T>>& all() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::size_t element_count(ParamKind kind) const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.kind == kind) n += p.var.value().size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.var.clear_grad();
  }

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Copies every value from `from` into the same-named parameter of `to`,
/// converting precision. Both stores must hold the same names and shapes.
template <typename U, typename T>
void copy_parameter_values(const ParameterStore<U>& from, ParameterStore<T>& to) {
  if (from.size() != to.size()) {
    throw ConfigError("parameter count mismatch: " + std::to_string(from.size()) + " vs " +
                      std::to_string(to.size()));
  }
  for (auto& dst : to.all()) {
    const auto& src = from.get(dst.name);
    if (src.var.shape() != dst.var.shape()) {
      throw DimensionError("parameter " + dst.name + ": shape " + shape_string(src.var.shape()) +
                           " vs " + shape_string(dst.var.shape()));
    }
    dst.var.mutable_value() = src.var.value().template cast<T>();
  }
}

}  // namespace apm
