#include "apm/harness/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "apm/core/errors.hpp"

namespace apm {

namespace {

void require_pose(const Tensor<float>& pred, const Tensor<float>& gt, const char* what) {
  if (pred.shape() != gt.shape() || pred.rank() != 2 || pred.dim(1) != 3) {
    throw DimensionError(std::string(what) + ": prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(gt.shape()));
  }
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double sample_mpjpe(const Tensor<float>& pred, const Tensor<float>& gt) {
  require_pose(pred, gt, "mpjpe");
  const std::size_t J = pred.dim(0);
  double total = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    double sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = static_cast<double>(pred[j * 3 + c]) - gt[j * 3 + c];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(J);
}

double sample_dmpjpe(const Tensor<float>& pred, const Tensor<float>& gt) {
  require_pose(pred, gt, "dmpjpe");
  const std::size_t J = pred.dim(0);
  double total = 0.0;
  for (std::size_t j = 0; j < J; ++j) total += std::abs(static_cast<double>(pred[j * 3 + 2]) - gt[j * 3 + 2]);
  return total / static_cast<double>(J);
}

double tail_dmpjpe(const std::vector<ActionMetrics>& per_action, const std::vector<int>& hard_set) {
  if (hard_set.empty()) throw ConfigError("tail D-MPJPE needs a non-empty hard-action set");
  double total = 0.0;
  for (int k : hard_set) {
    if (k < 0 || static_cast<std::size_t>(k) >= per_action.size()) {
      throw ConfigError("hard action index " + std::to_string(k) + " outside the action list");
    }
    total += per_action[static_cast<std::size_t>(k)].p2;
  }
  return total / static_cast<double>(hard_set.size());
}

MetricsReport compute_metrics(const std::vector<Tensor<float>>& preds, const std::vector<Tensor<float>>& targets,
                              const std::vector<int>& labels, const std::vector<int>& predicted,
                              const std::vector<std::string>& action_names, const std::vector<int>& hard_set) {
  if (preds.size() != targets.size() || preds.size() != labels.size() || preds.empty()) {
    throw ValidationError("metrics: need equal, non-zero counts of predictions, targets and labels");
  }
  if (!predicted.empty() && predicted.size() != labels.size()) {
    throw ValidationError("metrics: predicted labels do not match the sample count");
  }
  const std::size_t K = action_names.size();
  MetricsReport r;
  r.per_action.resize(K);
  for (std::size_t k = 0; k < K; ++k) r.per_action[k].action = action_names[k];

  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || static_cast<std::size_t>(k) >= K) {
      throw ValidationError("metrics: label " + std::to_string(k) + " outside manifest K=" + std::to_string(K));
    }
    const double p1 = sample_mpjpe(preds[i], targets[i]);
    const double p2 = sample_dmpjpe(preds[i], targets[i]);
    auto& a = r.per_action[static_cast<std::size_t>(k)];
    a.p1 += p1;
    a.p2 += p2;
    ++a.n;
    r.p1 += p1;
    r.p2 += p2;
    if (!predicted.empty() && predicted[i] == k) ++correct;
  }
  for (auto& a : r.per_action) {
    if (a.n > 0) {
      a.p1 /= static_cast<double>(a.n);
      a.p2 /= static_cast<double>(a.n);
    }
  }
  r.samples = preds.size();
  r.p1 /= static_cast<double>(r.samples);
  r.p2 /= static_cast<double>(r.samples);
  r.p3 = tail_dmpjpe(r.per_action, hard_set);
  if (!predicted.empty()) r.accuracy = static_cast<double>(correct) / static_cast<double>(r.samples);
  return r;
}

std::string format_metrics_csv(const MetricsReport& report) {
  std::string out = "action,P1,P2,n\n";
  for (const auto& a : report.per_action) {
    out += a.action + "," + num(a.p1) + "," + num(a.p2) + "," + std::to_string(a.n) + "\n";
  }
  out += "all," + num(report.p1) + "," + num(report.p2) + "," + std::to_string(report.samples) + "\n";
  return out;
}

std::string format_summary_csv(const MetricsReport& report) {
  return "P1,P2,P3,accuracy\n" + num(report.p1) + "," + num(report.p2) + "," + num(report.p3) + "," +
         (report.accuracy ? num(*report.accuracy) : std::string("NA")) + "\n";
}

std::string format_plot_data(const MetricsReport& report) {
  std::string out;
  for (const auto& a : report.per_action) out += a.action + " " + num(a.p1) + "\n";
  return out;
}

}  // namespace apm
