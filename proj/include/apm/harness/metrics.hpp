#pragma once

#include <optional>
#include <string>
#include <vector>

#include "apm/core/tensor.hpp"

namespace apm {

/// Per-sample errors of one [J×3] prediction against its target.
double sample_mpjpe(const Tensor<float>& pred, const Tensor<float>& gt);
double sample_dmpjpe(const Tensor<float>& pred, const Tensor<float>& gt);

struct ActionMetrics {
  std::string action;
  double p1 = 0.0;
  double p2 = 0.0;
  std::size_t n = 0;
};

struct MetricsReport {
  std::vector<ActionMetrics> per_action;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  /// Fraction of argmax(y) == label over the evaluated split; absent when the
  /// model has no action branch.
  std::optional<double> accuracy;
  std::size_t samples = 0;
};

/// Mean of per-action P2 over the hard set. Empty or unknown indices throw.
double tail_dmpjpe(const std::vector<ActionMetrics>& per_action, const std::vector<int>& hard_set);

/// predicted may be empty (no action branch) or hold one label per sample.
/// Actions with no samples report zeros and n = 0.
MetricsReport compute_metrics(const std::vector<Tensor<float>>& preds, const std::vector<Tensor<float>>& targets,
                              const std::vector<int>& labels, const std::vector<int>& predicted,
                              const std::vector<std::string>& action_names, const std::vector<int>& hard_set);

/// metrics.csv: header `action,P1,P2,n`, one row per action then an `all` row.
std::string format_metrics_csv(const MetricsReport& report);
/// summary.csv: header `P1,P2,P3,accuracy`; accuracy is NA when absent.
std::string format_summary_csv(const MetricsReport& report);
/// Per-action bar data: `action P1` pairs, one per line.
std::string format_plot_data(const MetricsReport& report);

}  // namespace apm
