#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "apm/core/var.hpp"

namespace apm {

struct GradCheckOptions {
  double eps = 1e-6;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead.
  double floor = 1e-3;
};

struct GradCheckReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

using NamedLeaf = std::pair<std::string, Var<double>>;

/// Compares reverse-mode gradients of a scalar computation against central
/// differences (f(x+eps) - f(x-eps)) / (2 eps), perturbing each leaf element
/// in place. `f` must rebuild its graph from the leaves on every call.
inline GradCheckReport grad_check(const std::string& name, const std::function<Var<double>()>& f,
                                  std::vector<NamedLeaf> leaves, GradCheckOptions opt = {}) {
  auto evaluate = [&]() {
    const double v = f().value()[0];
    if (!std::isfinite(v)) {
      throw GradCheckError("gradcheck '" + name + "': loss is not finite");
    }
    return v;
  };

  for (auto& [_, leaf] : leaves) leaf.clear_grad();
  Var<double> loss = f();
  if (!std::isfinite(loss.value()[0])) {
    throw GradCheckError("gradcheck '" + name + "': loss is not finite");
  }
  backward(loss);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& [_, leaf] : leaves) {
    analytic.push_back(leaf.has_grad() ? leaf.grad() : Tensor<double>(leaf.shape()));
  }

  GradCheckReport report;
  report.name = name;
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    auto& values = leaves[p].second.mutable_value();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + opt.eps;
      const double up = evaluate();
      values[i] = saved - opt.eps;
      const double down = evaluate();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = rel;
        report.worst_param = leaves[p].first;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= opt.tolerance;
  return report;
}

}  // namespace apm
