#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "apm/data/keyvalue.hpp"
#include "apm/harness/ablation.hpp"
#include "apm/harness/gradcheck_suite.hpp"
#include "apm/harness/losses.hpp"
#include "apm/harness/trainer.hpp"

namespace fs = std::filesystem;
using namespace apm;

namespace {

Tensor<float> random_pose(std::size_t J, Rng& rng, double spread = 100.0) {
  Tensor<float> t({J, 3});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-spread, spread));
  return t;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("apm_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Small, fast experiment: K=4, F=9, 10 train / 5 eval per action.
ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.data.synthetic.frames = 9;
  c.data.synthetic.train_per_action = 10;
  c.data.synthetic.eval_per_action = 5;
  c.model.encoder.channels = 8;
  c.model.atp.context_tokens = 4;
  c.model.app.prompts = 4;
  c.train.epochs = 3;
  return c;
}

std::string cli() { return APM_CLI_PATH; }

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = cli() + " " + args + " >/dev/null 2>" + stderr_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// Losses

TEST(Losses, PoseLossExamples) {
  Tensor<double> gt({2, 4, 3});
  Rng rng(1);
  for (auto& v : gt.data()) v = rng.uniform(-5, 5);
  EXPECT_EQ(pose_loss(Var<double>::constant(gt), gt).value()[0], 0.0);
  Tensor<double> shifted = gt;
  for (std::size_t r = 0; r < 8; ++r) {
    shifted[r * 3] += 3.0;
    shifted[r * 3 + 2] += 4.0;
  }
  EXPECT_NEAR(pose_loss(Var<double>::constant(shifted), gt).value()[0], 5.0, 1e-12);
  EXPECT_THROW(pose_loss(Var<double>::constant(Tensor<double>({2, 4, 3})), Tensor<double>({2, 3, 3})),
               DimensionError);
}

TEST(Losses, ActionLossExamples) {
  auto one_hot = Var<double>::constant(Tensor<double>({1, 3}, std::vector<double>{0, 1, 0}));
  EXPECT_EQ(action_loss(one_hot, 1).value()[0], 0.0);
  auto uniform = Var<double>::constant(Tensor<double>({1, 5}, 0.2));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(action_loss(uniform, k).value()[0], std::log(5.0), 1e-12);
  auto y = Var<double>::constant(Tensor<double>({1, 2}, std::vector<double>{2.0 / 3.0, 1.0 / 3.0}));
  EXPECT_NEAR(action_loss(y, 1).value()[0], std::log(3.0), 1e-12);
  EXPECT_NEAR(action_loss(y, 1).value()[0], 1.0986, 1e-4);
  EXPECT_THROW(action_loss(y, 2), ValidationError);
}

TEST(Losses, TotalLossExamples) {
  EXPECT_EQ(total_loss(2.0, 3.0, 0.0), 2.0);
  EXPECT_NEAR(total_loss(2.0, 3.0, 0.1), 2.3, 1e-15);
  EXPECT_EQ(total_loss(0.0, 0.0, 0.1), 0.0);
  EXPECT_THROW(total_loss(1.0, 1.0, -0.1), ConfigError);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double lp = rng.uniform(0, 100), la = rng.uniform(0, 10);
    EXPECT_EQ(total_loss(lp, la, 0.1), lp + 0.1 * la);
    auto v = total_loss(Var<double>::constant(Tensor<double>({1}, lp)), Var<double>::constant(Tensor<double>({1}, la)), 0.1);
    EXPECT_EQ(v.value()[0], lp + 0.1 * la);
  }
}

// Metrics

TEST(Metrics, SampleExamples) {
  Rng rng(3);
  auto gt = random_pose(6, rng);
  EXPECT_EQ(sample_mpjpe(gt, gt), 0.0);
  EXPECT_EQ(sample_dmpjpe(gt, gt), 0.0);
  auto z = gt;
  for (std::size_t j = 0; j < 6; ++j) z[j * 3 + 2] += 2.0f;
  EXPECT_NEAR(sample_dmpjpe(z, gt), 2.0, 1e-5);
  EXPECT_NEAR(sample_mpjpe(z, gt), sample_dmpjpe(z, gt), 1e-9);
}

TEST(Metrics, TailExamples) {
  std::vector<ActionMetrics> per{{"a", 1, 2, 3}, {"b", 1, 4, 3}, {"c", 1, 9, 3}, {"d", 1, 1, 3}};
  EXPECT_DOUBLE_EQ(tail_dmpjpe(per, {2}), 9.0);
  EXPECT_DOUBLE_EQ(tail_dmpjpe(per, {0, 1, 2}), 5.0);
  EXPECT_DOUBLE_EQ(tail_dmpjpe(per, {0, 1, 2, 3}), 4.0);
  EXPECT_THROW(tail_dmpjpe(per, {}), ConfigError);
  EXPECT_THROW(tail_dmpjpe(per, {4}), ConfigError);
}

TEST(Metrics, ReportMatchesBruteForce) {
  Rng rng(4);
  const std::vector<std::string> names{"a", "b", "c"};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0, 12));
    std::vector<Tensor<float>> preds, gts;
    std::vector<int> labels, predicted;
    for (std::size_t i = 0; i < n; ++i) {
      preds.push_back(random_pose(4, rng));
      gts.push_back(random_pose(4, rng));
      labels.push_back(static_cast<int>(i % 3));
      predicted.push_back(static_cast<int>(rng.uniform(0, 3)) % 3);
    }
    const auto r = compute_metrics(preds, gts, labels, predicted, names, {1, 2});
    std::vector<double> p1(3, 0), p2(3, 0);
    std::vector<int> cnt(3, 0);
    double all1 = 0, all2 = 0;
    int hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double e1 = 0, e2 = 0;
      for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int c = 0; c < 3; ++c) s += std::pow(double(preds[i][j * 3 + c]) - gts[i][j * 3 + c], 2);
        e1 += std::sqrt(s) / 4;
        e2 += std::fabs(double(preds[i][j * 3 + 2]) - gts[i][j * 3 + 2]) / 4;
      }
      p1[labels[i]] += e1, p2[labels[i]] += e2, cnt[labels[i]]++;
      all1 += e1 / n, all2 += e2 / n;
      hits += predicted[i] == labels[i];
    }
    double weighted = 0;
    for (int a = 0; a < 3; ++a) {
      EXPECT_EQ(r.per_action[a].n, static_cast<std::size_t>(cnt[a]));
      if (cnt[a]) {
        EXPECT_NEAR(r.per_action[a].p1, p1[a] / cnt[a], 1e-6);
        EXPECT_NEAR(r.per_action[a].p2, p2[a] / cnt[a], 1e-6);
      }
      weighted += r.per_action[a].p1 * r.per_action[a].n;
    }
    EXPECT_NEAR(r.p1, all1, 1e-6);
    EXPECT_NEAR(r.p2, all2, 1e-6);
    EXPECT_NEAR(r.p1, weighted / n, 1e-6);
    ASSERT_TRUE(r.accuracy.has_value());
    EXPECT_NEAR(*r.accuracy, double(hits) / n, 1e-12);
    EXPECT_GE(r.p3, 0.0);
  }
}

TEST(Metrics, SingleSampleAggregateEqualsSample) {
  Rng rng(5);
  auto p = random_pose(5, rng), g = random_pose(5, rng);
  const auto r = compute_metrics({p}, {g}, {0}, {}, {"only", "other"}, {0});
  EXPECT_DOUBLE_EQ(r.p1, sample_mpjpe(p, g));
  EXPECT_DOUBLE_EQ(r.p2, sample_dmpjpe(p, g));
  EXPECT_FALSE(r.accuracy.has_value());
}

TEST(Metrics, CsvLayout) {
  MetricsReport r;
  r.per_action = {{"walk", 1.5, 0.5, 2}};
  r.p1 = 1.5, r.p2 = 0.5, r.p3 = 0.25, r.samples = 2;
  EXPECT_EQ(format_metrics_csv(r), "action,P1,P2,n\nwalk,1.500000,0.500000,2\nall,1.500000,0.500000,2\n");
  EXPECT_EQ(format_summary_csv(r), "P1,P2,P3,accuracy\n1.500000,0.500000,0.250000,NA\n");
  r.accuracy = 0.75;
  EXPECT_EQ(format_summary_csv(r), "P1,P2,P3,accuracy\n1.500000,0.500000,0.250000,0.750000\n");
}

// Configuration

TEST(Config, FormatParseRoundTrip) {
  ExperimentConfig c = quick_config();
  c.data.hard_actions = {"a2", "a3"};
  c.model.atp.text_source = TextSource::learnable;
  c.model.atp.tau = 0.05;
  c.train.lambda = 0.25;
  c.train.lr = 3e-4;
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text, "t")), text);
}

TEST(Config, OverridesOnlyNamedKeys) {
  const auto c = parse_config("[train]\nlambda = 0.5\n[app]\nenabled = false\n", "t");
  EXPECT_EQ(c.train.lambda, 0.5);
  EXPECT_FALSE(c.model.app.enabled);
  EXPECT_EQ(c.train.batch_size, 16);
  EXPECT_EQ(c.model.atp.tau, 0.07);
}

TEST(Config, UnknownKeyNamesLine) {
  try {
    parse_config("[train]\nlambda = 0.5\nlamda = 1\n", "cfg.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.ini:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("[nope]\nx = 1\n", "t"), ConfigError);
  EXPECT_THROW(validate(parse_config("[train]\nlambda = -1\n", "t")), ConfigError);
}

// Checkpoints

TEST(Checkpoint, RoundTripBitIdentical) {
  ExperimentConfig c = quick_config();
  c.train.epochs = 1;
  const auto ds = prepare_dataset(c);
  const auto outcome = train(c, ds);
  const auto bytes = encode_checkpoint(outcome.best);
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.parameters, outcome.best.parameters);
  EXPECT_EQ(back.optimizer.steps, outcome.best.optimizer.steps);
  ASSERT_EQ(back.optimizer.moments.size(), outcome.best.optimizer.moments.size());
  for (const auto& [name, m] : outcome.best.optimizer.moments) {
    EXPECT_EQ(back.optimizer.moments.at(name).first, m.first) << name;
    EXPECT_EQ(back.optimizer.moments.at(name).second, m.second) << name;
  }
  ASSERT_TRUE(back.text_embeddings.has_value());
  EXPECT_EQ(*back.text_embeddings, *outcome.best.text_embeddings);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(outcome.best, (dir / "m.ckpt").string());
  const auto loaded = load_checkpoint((dir / "m.ckpt").string());
  const auto a = evaluate_checkpoint(outcome.best, ds, ds.eval, false);
  const auto b = evaluate_checkpoint(loaded, ds, ds.eval, false);
  EXPECT_EQ(format_summary_csv(a), format_summary_csv(b));
  EXPECT_EQ(format_metrics_csv(a), format_metrics_csv(b));
  EXPECT_EQ(format_summary_csv(a), format_summary_csv(outcome.best_report));
}

TEST(Checkpoint, CorruptionIsFormatError) {
  ExperimentConfig c = quick_config();
  auto model = build_model(resolve_dimensions(c, prepare_dataset(c).manifest), {"a0", "a1", "a2", "a3"});
  Checkpoint ckpt;
  ckpt.config_text = format_config(c);
  ckpt.parameters = capture_parameters(model->parameters());
  const auto bytes = encode_checkpoint(ckpt);

  auto bad_magic = bytes;
  bad_magic[0] ^= 0x55;
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[8] = 99;
  EXPECT_THROW(decode_checkpoint(bad_version), FormatError);

  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() * 2 / 3));
  try {
    decode_checkpoint(cut);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("parameter"), std::string::npos) << e.what();
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
}

TEST(Checkpoint, MismatchedConfigNamesParameter) {
  ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  auto model = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  auto saved = capture_parameters(model->parameters());
  ExperimentConfig wider = c;
  wider.model.encoder.channels = 12;
  auto other = build_model(resolve_dimensions(wider, ds.manifest), ds.manifest.action_names);
  try {
    restore_parameters(saved, other->parameters());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(saved.front().name), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, DimensionMismatchNamesField) {
  ExperimentConfig c = quick_config();
  c.train.epochs = 1;
  const auto ds = prepare_dataset(c);
  const auto outcome = train(c, ds);
  ExperimentConfig longer = c;
  longer.data.synthetic.frames = 27;
  const auto other = prepare_dataset(longer);
  try {
    evaluate_checkpoint(outcome.best, other, other.eval, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("F"), std::string::npos) << e.what();
  }
}

TEST(TextEmbeddings, FileRowsReorderedByName) {
  const auto dir = temp_dir("text");
  Tensor<float> t = Tensor<float>::matrix({{1, 1}, {2, 2}, {3, 3}});
  save_text_embeddings((dir / "t").string(), t, {"c", "a", "b"});
  const auto back = load_text_embeddings((dir / "t").string(), {"a", "b", "c"});
  EXPECT_EQ(back, Tensor<float>::matrix({{2, 2}, {3, 3}, {1, 1}}));
  EXPECT_THROW(load_text_embeddings((dir / "t").string(), {"a", "b", "zzz"}), ValidationError);
}

// Training and evaluation

TEST(Training, FixedSeedReproducesLog) {
  const ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  auto log_of = [&] {
    std::string log;
    train(c, ds, [&](const EpochRecord& r) { log += format_log_line(r) + "\n"; });
    return log;
  };
  const auto a = log_of();
  EXPECT_EQ(a, log_of());
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), c.train.epochs);
}

TEST(Training, LogLineFormat) {
  EXPECT_EQ(format_log_line({3, 1.5, 0.25, 40.125}), "3,1.500000,0.250000,40.125000");
}

TEST(Training, MaxStepsHonored) {
  ExperimentConfig c = quick_config();
  c.train.max_steps = 4;
  EXPECT_EQ(train(c, prepare_dataset(c)).steps, 4u);
}

TEST(Training, FrozenTextEncoderUnchanged) {
  ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  auto model = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  const auto before = capture_parameters(model->parameters());
  Adam<float> adam;
  std::vector<const data::PoseSample*> batch;
  for (std::size_t i = 0; i < 8; ++i) batch.push_back(&ds.train[i]);
  for (int step = 0; step < 5; ++step) train_step(*model, adam, batch, 0.1);
  const auto after = capture_parameters(model->parameters());
  std::size_t frozen = 0, moved = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].kind == ParamKind::frozen) {
      ++frozen;
      EXPECT_EQ(before[i].value, after[i].value) << before[i].name;
    } else if (before[i].kind == ParamKind::trainable && !(before[i].value == after[i].value)) {
      ++moved;
    }
  }
  EXPECT_GT(frozen, 0u);
  EXPECT_GT(moved, 0u);
}

TEST(Evaluation, RepeatableAndSkipsTextEncoder) {
  ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  auto model = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  Tensor<float> t;
  {
    NoGradGuard guard;
    t = model->text_embeddings().value();
  }
  const auto calls = model->text_encoder_calls();
  const auto a = evaluate(*model, ds, ds.eval, &t, false);
  const auto b = evaluate(*model, ds, ds.eval, &t, false);
  EXPECT_EQ(model->text_encoder_calls(), calls);
  EXPECT_EQ(format_metrics_csv(a), format_metrics_csv(b));
  EXPECT_EQ(format_summary_csv(a), format_summary_csv(b));
}

TEST(Evaluation, AccuracyMatchesRecount) {
  ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  auto model = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  const auto preds = predict(*model, ds.eval, nullptr, false);
  int hits = 0;
  for (std::size_t i = 0; i < ds.eval.size(); ++i) {
    const auto& y = preds.probabilities[i];
    std::size_t best = 0;
    for (std::size_t k = 1; k < y.size(); ++k)
      if (y[k] > y[best]) best = k;
    hits += static_cast<int>(best) == ds.eval[i].action;
  }
  const auto report = evaluate(*model, ds, ds.eval, nullptr, false);
  ASSERT_TRUE(report.accuracy.has_value());
  EXPECT_DOUBLE_EQ(*report.accuracy, double(hits) / ds.eval.size());
}

TEST(Evaluation, GroundTruthSelectionMatchesAtFullAccuracy) {
  ExperimentConfig c;
  c.train.epochs = 15;
  const auto ds = prepare_dataset(c);
  const auto outcome = train(c, ds);
  ASSERT_EQ(outcome.best_report.accuracy.value_or(0.0), 1.0);
  const auto predicted = evaluate_checkpoint(outcome.best, ds, ds.eval, false);
  const auto gt = evaluate_checkpoint(outcome.best, ds, ds.eval, true);
  EXPECT_EQ(format_metrics_csv(predicted), format_metrics_csv(gt));
  EXPECT_EQ(format_summary_csv(predicted), format_summary_csv(gt));
}

class ZeroLambdaControl : public ::testing::TestWithParam<std::uint64_t> {};

// Measured over seeds 1-6 at 10 epochs: lambda=0 accuracy 0.24-0.40 (chance
// is 0.25), lambda=0.1 accuracy 1.0.
TEST_P(ZeroLambdaControl, ActionBranchStaysAtInitialization) {
  ExperimentConfig c;
  c.train.epochs = 10;
  c.train.lambda = 0.0;
  c.train.seed = GetParam();
  c.model.app.enabled = false;
  const auto ds = prepare_dataset(c);
  auto fresh = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  const auto initial = capture_parameters(fresh->parameters());
  const auto control = train(c, ds);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (initial[i].name.rfind("atp.", 0) == 0) {
      EXPECT_EQ(initial[i].value, control.best.parameters[i].value) << initial[i].name;
    }
  }
  c.train.lambda = 0.1;
  const auto trained = train(c, ds);
  EXPECT_LE(control.best_report.accuracy.value(), 0.5);
  EXPECT_GE(trained.best_report.accuracy.value(), 0.9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, ZeroLambdaControl, ::testing::Values(1u, 2u, 3u));

// Ablation

TEST(Ablation, ComponentVariantsAndBaselineConsistency) {
  ExperimentConfig c = quick_config();
  AblationOptions opt;
  opt.seeds = {1};
  const auto variants = ablation_variants(c, opt);
  ASSERT_EQ(variants.size(), 5u);
  EXPECT_EQ(variants[0].name, "baseline");
  EXPECT_EQ(variants[4].name, "full");
  const auto rows = run_ablation(c, opt);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    EXPECT_GE(r.p1, 0.0);
    EXPECT_EQ(r.runs.size(), 1u);
    EXPECT_EQ(r.accuracy.has_value(), r.variant != "baseline") << r.variant;
  }
  ExperimentConfig base = c;
  base.model.atp.branch = ActionBranch::none;
  base.model.app.enabled = false;
  const auto standalone = train(base, prepare_dataset(base));
  EXPECT_EQ(format_summary_csv(rows[0].runs[0]), format_summary_csv(standalone.best_report));
  const auto table = format_ablation_csv(AblationMode::components, rows);
  EXPECT_EQ(table.substr(0, table.find('\n')), "mode,variant,P1,P2,P3,accuracy,seeds");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
}

TEST(Ablation, ModeNamesRoundTrip) {
  for (auto m : {AblationMode::components, AblationMode::length, AblationMode::position, AblationMode::app_params,
                 AblationMode::gt_labels, AblationMode::text_source, AblationMode::atp_components}) {
    EXPECT_EQ(parse_ablation_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_ablation_mode("bogus"), ConfigError);
}

TEST(Ablation, FreshFullModelEvaluatesLikeBaseline) {
  ExperimentConfig c = quick_config();
  const auto ds = prepare_dataset(c);
  ExperimentConfig base = c;
  base.model.atp.branch = ActionBranch::none;
  base.model.app.enabled = false;
  auto full = build_model(resolve_dimensions(c, ds.manifest), ds.manifest.action_names);
  auto plain = build_model(resolve_dimensions(base, ds.manifest), ds.manifest.action_names);
  const auto a = evaluate(*full, ds, ds.eval, nullptr, false);
  const auto b = evaluate(*plain, ds, ds.eval, nullptr, false);
  EXPECT_EQ(format_metrics_csv(a), format_metrics_csv(b));
}

// Command line

TEST(Cli, UnsupportedFramesIsOneLineError) {
  const auto dir = temp_dir("cli_frames");
  EXPECT_EQ(run_cli("train --frames 10 --out " + (dir / "o").string(), dir / "err.txt"), 1);
  const auto err = io::read_text_file((dir / "err.txt").string());
  EXPECT_EQ(err.rfind("error: config: ", 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto dir = temp_dir("cli_usage");
  EXPECT_EQ(run_cli("train --no-such-flag", dir / "err.txt"), 2);
  EXPECT_EQ(run_cli("", dir / "err.txt"), 2);
}

TEST(Cli, MissingCheckpointIsError) {
  const auto dir = temp_dir("cli_ckpt");
  EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "missing.ckpt").string(), dir / "err.txt"), 1);
  const auto err = io::read_text_file((dir / "err.txt").string());
  EXPECT_EQ(err.rfind("error: ", 0), 0u) << err;
}

TEST(Cli, GenDataWritesLoadableDataset) {
  const auto dir = temp_dir("cli_gen");
  EXPECT_EQ(run_cli("gen-data --seed 3 --frames 9 --out " + (dir / "d").string(), dir / "err.txt"), 0);
  const auto ds = data::load_dataset((dir / "d").string());
  EXPECT_EQ(ds.manifest.frames, 9);
  EXPECT_EQ(ds.manifest.seed, 3u);
}

TEST(GradCheckSuite, EveryCheckWithinTolerance) {
  const auto reports = run_gradcheck_suite(3);
  EXPECT_GE(reports.size(), 30u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.passed) << r.name << " rel " << r.max_rel_error << " at " << r.worst_param << "[" << r.worst_index
                          << "]";
    EXPECT_GT(r.checked, 0u) << r.name;
  }
}
