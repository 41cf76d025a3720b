#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "apm/harness/config.hpp"
#include "apm/harness/metrics.hpp"

namespace apm {

enum class AblationMode { components, length, position, app_params, gt_labels, text_source, atp_components };

const char* to_string(AblationMode mode);
AblationMode parse_ablation_mode(const std::string& s);

/// One configured run of the matrix; `evaluate_with_gt` re-evaluates the
/// trained model with ground-truth prompt selection.
struct AblationVariant {
  std::string name;
  ExperimentConfig config;
  bool evaluate_with_gt = false;
};

struct AblationRow {
  std::string variant;
  std::vector<MetricsReport> runs;  // one per seed
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  std::optional<double> accuracy;
};

struct AblationOptions {
  AblationMode mode = AblationMode::components;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<int> frames{9, 27};        // length mode
  std::vector<int> prompt_counts{1, 8};  // app-params mode
  std::vector<int> decoder_layers{1, 2};  // app-params mode
};

/// Builds the variant list for a mode. The components matrix is baseline,
/// label-only, ATP-only, APP-only (label branch), full.
std::vector<AblationVariant> ablation_variants(const ExperimentConfig& base, const AblationOptions& options);

/// Trains every variant once per seed (training seed only; the dataset is
/// shared) and averages the eval reports.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const AblationOptions& options,
                                      const std::function<void(const std::string&)>& progress = {});

/// `mode,variant,P1,P2,P3,accuracy,seeds`.
std::string format_ablation_csv(AblationMode mode, const std::vector<AblationRow>& rows);

}  // namespace apm
