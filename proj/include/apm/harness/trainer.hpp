#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "apm/core/adam.hpp"
#include "apm/data/dataset.hpp"
#include "apm/harness/checkpoint.hpp"
#include "apm/harness/config.hpp"
#include "apm/harness/metrics.hpp"
#include "apm/model/model.hpp"

namespace apm {

/// Loads config.data.dir or generates the synthetic set, then applies
/// train_limit, eval_on_train and the hard-action override.
data::Dataset prepare_dataset(const ExperimentConfig& config);

/// Copies F, J, K from the manifest into both the data and model sections.
ExperimentConfig resolve_dimensions(ExperimentConfig config, const data::DatasetManifest& manifest);

/// Model for a resolved config; reads the embeddings file when
/// text_source = file.
std::unique_ptr<ApmModel<float>> build_model(const ExperimentConfig& config,
                                             const std::vector<std::string>& action_names);

/// Per-joint mean target [J×3] and the RMS deviation from it over all
/// coordinates of the given samples (1 when that is zero).
std::pair<Tensor<float>, float> target_statistics(const std::vector<data::PoseSample>& samples);

struct StepLosses {
  double pose = 0.0;
  double action = 0.0;
  double total = 0.0;
};

/// One optimizer step on a minibatch with ground-truth prompt selection.
StepLosses train_step(ApmModel<float>& model, Adam<float>& adam, const std::vector<const data::PoseSample*>& batch,
                      double lambda);

struct Predictions {
  std::vector<Tensor<float>> poses;
  std::vector<Tensor<float>> probabilities;  // empty without an action branch
  std::vector<int> predicted;                // argmax of each probability row
};

/// Inference without a tape. `text` is the saved t; the text encoder is
/// never called when it is given.
Predictions predict(ApmModel<float>& model, const std::vector<data::PoseSample>& samples, const Tensor<float>* text,
                    bool gt_labels);

MetricsReport evaluate(ApmModel<float>& model, const data::Dataset& dataset, const std::vector<data::PoseSample>& split,
                       const Tensor<float>* text, bool gt_labels);

/// Rebuilds the model from a checkpoint and evaluates with its saved t.
/// Dimension mismatches with the dataset name the offending fields.
MetricsReport evaluate_checkpoint(const Checkpoint& checkpoint, const data::Dataset& dataset,
                                  const std::vector<data::PoseSample>& split, bool gt_labels);

struct EpochRecord {
  int epoch = 0;
  double pose_loss = 0.0;
  double action_loss = 0.0;
  double eval_p1 = 0.0;
};

/// `epoch,L_P,L_A,evalP1` with fixed six-decimal formatting.
std::string format_log_line(const EpochRecord& record);

struct TrainOutcome {
  Checkpoint best;
  MetricsReport best_report;
  std::vector<EpochRecord> log;
  std::uint64_t steps = 0;
};

/// Raised on a non-finite loss; carries the last checkpoint whose
/// parameters were all finite.
class TrainingAborted : public TrainingError {
 public:
  TrainingAborted(const std::string& message, Checkpoint last_good)
      : TrainingError(message), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

/// Minibatch training on dataset.train with per-epoch evaluation on
/// dataset.eval. Keeps the best eval-P1 checkpoint.
TrainOutcome train(const ExperimentConfig& config, const data::Dataset& dataset,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace apm
