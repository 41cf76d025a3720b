#include "apm/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "apm/harness/losses.hpp"

namespace apm {

namespace {

constexpr std::size_t kEvalChunk = 64;

Var<float> stack_poses(const std::vector<Var<float>>& poses) {
  const Shape& s = poses.front().shape();
  return ops::reshape(ops::concat(poses, 0), {poses.size(), s[0], s[1]});
}

Tensor<float> stack_targets(const std::vector<const data::PoseSample*>& batch) {
  const Shape& s = batch.front()->target3d.shape();
  Tensor<float> out({batch.size(), s[0], s[1]});
  std::size_t offset = 0;
  for (const auto* sample : batch) {
    std::copy(sample->target3d.data().begin(), sample->target3d.data().end(), out.data().begin() + offset);
    offset += sample->target3d.size();
  }
  return out;
}

bool parameters_finite(const ParameterStore<float>& store) {
  return std::all_of(store.all().begin(), store.all().end(),
                     [](const auto& p) { return p.var.value().all_finite(); });
}

std::optional<Tensor<float>> saved_text(ApmModel<float>& model) {
  if (model.config().atp.branch != ActionBranch::text) return std::nullopt;
  NoGradGuard guard;
  return model.text_embeddings().value();
}

}  // namespace

data::Dataset prepare_dataset(const ExperimentConfig& config) {
  data::Dataset ds = config.data.dir.empty() ? data::generate_synthetic(config.data.synthetic)
                                             : data::load_dataset(config.data.dir);
  if (config.data.train_limit > 0 && static_cast<std::size_t>(config.data.train_limit) < ds.train.size()) {
    ds.train.resize(static_cast<std::size_t>(config.data.train_limit));
  }
  if (config.data.eval_on_train) ds.eval = ds.train;
  ds.manifest.train_count = ds.train.size();
  ds.manifest.eval_count = ds.eval.size();
  if (!config.data.hard_actions.empty()) ds.manifest.hard_actions = config.data.hard_actions;
  data::validate(ds);
  return ds;
}

ExperimentConfig resolve_dimensions(ExperimentConfig config, const data::DatasetManifest& manifest) {
  config.data.synthetic.actions = config.model.actions = manifest.actions;
  config.data.synthetic.frames = config.model.frames = manifest.frames;
  config.data.synthetic.joints = config.model.joints = manifest.joints;
  return config;
}

std::unique_ptr<ApmModel<float>> build_model(const ExperimentConfig& config,
                                             const std::vector<std::string>& action_names) {
  validate(config);
  std::optional<Tensor<float>> fixed;
  const auto& atp = config.model.atp;
  if (atp.branch == ActionBranch::text && atp.text_source == TextSource::file) {
    fixed = load_text_embeddings(atp.embeddings_path, action_names);
  }
  return std::make_unique<ApmModel<float>>(config.model, config.train.seed, std::move(fixed));
}

std::pair<Tensor<float>, float> target_statistics(const std::vector<data::PoseSample>& samples) {
  if (samples.empty()) throw ValidationError("target statistics need at least one sample");
  const Shape& shape = samples.front().target3d.shape();
  std::vector<double> mean(shape_size(shape), 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.target3d[i];
  }
  for (auto& m : mean) m /= static_cast<double>(samples.size());
  double sq = 0.0;
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < mean.size(); ++i) sq += (s.target3d[i] - mean[i]) * (s.target3d[i] - mean[i]);
  }
  const double rms = std::sqrt(sq / static_cast<double>(samples.size() * mean.size()));
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = static_cast<float>(mean[i]);
  return {out, rms > 0.0 ? static_cast<float>(rms) : 1.0f};
}

StepLosses train_step(ApmModel<float>& model, Adam<float>& adam, const std::vector<const data::PoseSample*>& batch,
                      double lambda) {
  std::vector<Var<float>> inputs;
  std::vector<int> labels;
  for (const auto* s : batch) {
    inputs.push_back(Var<float>::constant(s->input2d));
    labels.push_back(s->action);
  }
  ForwardOptions<float> options;
  options.training = true;
  options.select_with_labels = true;
  auto result = model.forward(inputs, labels, options);

  Var<float> lp = pose_loss(stack_poses(result.poses), stack_targets(batch));
  Var<float> loss = lp;
  StepLosses out;
  if (!result.probabilities.empty()) {
    Var<float> la = mean_action_loss(result.probabilities, labels);
    loss = total_loss(lp, la, lambda);
    out.action = la.value()[0];
  }
  out.pose = lp.value()[0];
  out.total = loss.value()[0];
  if (!std::isfinite(out.total)) return out;

  auto& store = model.parameters();
  store.zero_grad();
  backward(loss);
  adam.step(store);
  return out;
}

Predictions predict(ApmModel<float>& model, const std::vector<data::PoseSample>& samples, const Tensor<float>* text,
                    bool gt_labels) {
  NoGradGuard guard;
  std::optional<Tensor<float>> computed;
  if (!text && model.config().atp.branch == ActionBranch::text) {
    computed = model.text_embeddings().value();
    text = &*computed;
  }
  Predictions out;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
    std::vector<Var<float>> inputs;
    std::vector<int> labels;
    for (std::size_t i = begin; i < end; ++i) {
      inputs.push_back(Var<float>::constant(samples[i].input2d));
      labels.push_back(samples[i].action);
    }
    ForwardOptions<float> options;
    options.select_with_labels = gt_labels;
    options.text_embeddings = text;
    auto result = model.forward(inputs, labels, options);
    for (auto& p : result.poses) out.poses.push_back(p.value());
    for (auto& y : result.probabilities) {
      out.predicted.push_back(static_cast<int>(argmax(y.value())));
      out.probabilities.push_back(y.value());
    }
  }
  return out;
}

MetricsReport evaluate(ApmModel<float>& model, const data::Dataset& dataset, const std::vector<data::PoseSample>& split,
                       const Tensor<float>* text, bool gt_labels) {
  const auto pred = predict(model, split, text, gt_labels);
  std::vector<Tensor<float>> targets;
  std::vector<int> labels;
  for (const auto& s : split) {
    targets.push_back(s.target3d);
    labels.push_back(s.action);
  }
  return compute_metrics(pred.poses, targets, labels, pred.predicted, dataset.manifest.action_names,
                         dataset.hard_action_indices());
}

MetricsReport evaluate_checkpoint(const Checkpoint& checkpoint, const data::Dataset& dataset,
                                  const std::vector<data::PoseSample>& split, bool gt_labels) {
  const ExperimentConfig config = parse_config(checkpoint.config_text, "checkpoint config");
  const auto& m = dataset.manifest;
  std::string mismatch;
  if (config.data.synthetic.frames != m.frames) {
    mismatch += " F (checkpoint " + std::to_string(config.data.synthetic.frames) + ", dataset " +
                std::to_string(m.frames) + ")";
  }
  if (config.data.synthetic.joints != m.joints) {
    mismatch += " J (checkpoint " + std::to_string(config.data.synthetic.joints) + ", dataset " +
                std::to_string(m.joints) + ")";
  }
  if (config.data.synthetic.actions != m.actions) {
    mismatch += " K (checkpoint " + std::to_string(config.data.synthetic.actions) + ", dataset " +
                std::to_string(m.actions) + ")";
  }
  if (!mismatch.empty()) throw ValidationError("checkpoint does not match dataset:" + mismatch);

  const ExperimentConfig resolved = resolve_dimensions(config, m);
  std::optional<Tensor<float>> fixed;
  if (resolved.model.atp.branch == ActionBranch::text && resolved.model.atp.text_source == TextSource::file) {
    if (!checkpoint.text_embeddings) throw ValidationError("checkpoint lacks saved text embeddings");
    fixed = *checkpoint.text_embeddings;
  }
  ApmModel<float> model(resolved.model, resolved.train.seed, std::move(fixed));
  restore_parameters(checkpoint.parameters, model.parameters());
  if (resolved.model.atp.branch == ActionBranch::text && !checkpoint.text_embeddings) {
    throw ValidationError("checkpoint lacks saved text embeddings");
  }
  const Tensor<float>* text = checkpoint.text_embeddings ? &*checkpoint.text_embeddings : nullptr;
  return evaluate(model, dataset, split, text, gt_labels);
}

std::string format_log_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f", r.epoch, r.pose_loss, r.action_loss, r.eval_p1);
  return buf;
}

TrainOutcome train(const ExperimentConfig& raw, const data::Dataset& dataset,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  const ExperimentConfig config = resolve_dimensions(raw, dataset.manifest);
  validate(config);
  if (dataset.train.empty() || dataset.eval.empty()) throw ValidationError("training needs non-empty splits");
  auto model = build_model(config, dataset.manifest.action_names);
  const auto [target_mean, target_scale] = target_statistics(dataset.train);
  model->set_target_statistics(target_mean, target_scale);
  AdamConfig adam_config;
  adam_config.learning_rate = config.train.lr;
  adam_config.decay = config.train.lr_decay;
  Adam<float> adam(adam_config);

  const std::string config_text = format_config(config);
  auto snapshot = [&](int epoch, double best_p1) {
    Checkpoint c;
    c.config_text = config_text;
    c.epoch = epoch;
    c.best_p1 = best_p1;
    c.parameters = capture_parameters(model->parameters());
    c.optimizer = capture_optimizer(adam);
    c.text_embeddings = saved_text(*model);
    return c;
  };

  TrainOutcome out;
  Checkpoint last_good = snapshot(0, 0.0);
  bool have_best = false;
  std::vector<std::size_t> order(dataset.train.size());
  const auto batch_size = static_cast<std::size_t>(config.train.batch_size);
  bool stop = false;

  for (int epoch = 1; epoch <= config.train.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(derive_seed(config.train.seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double pose_sum = 0.0, action_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      std::vector<const data::PoseSample*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&dataset.train[order[i]]);
      const StepLosses step = train_step(*model, adam, batch, config.train.lambda);
      if (!std::isfinite(step.total) || !parameters_finite(model->parameters())) {
        throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                                  std::to_string(out.steps + 1) + " (L_P=" + std::to_string(step.pose) +
                                  ", L_A=" + std::to_string(step.action) + ")",
                              std::move(last_good));
      }
      ++out.steps;
      pose_sum += step.pose * static_cast<double>(batch.size());
      action_sum += step.action * static_cast<double>(batch.size());
      seen += batch.size();
      if (config.train.max_steps > 0 && out.steps >= static_cast<std::uint64_t>(config.train.max_steps)) {
        stop = true;
        break;
      }
    }
    adam.decay_learning_rate();

    const auto text = saved_text(*model);
    const MetricsReport report =
        evaluate(*model, dataset, dataset.eval, text ? &*text : nullptr, config.train.gt_labels_at_eval);
    EpochRecord record{epoch, pose_sum / static_cast<double>(seen), action_sum / static_cast<double>(seen),
                       report.p1};
    out.log.push_back(record);
    if (on_epoch) on_epoch(record);
    last_good = snapshot(epoch, have_best ? std::min(out.best.best_p1, report.p1) : report.p1);
    if (!have_best || report.p1 < out.best.best_p1) {
      out.best = last_good;
      out.best.best_p1 = report.p1;
      out.best_report = report;
      have_best = true;
    }
  }
  return out;
}

}  // namespace apm
