// Command-line entry point: gen-data, train, eval, ablate, gradcheck.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "apm/data/keyvalue.hpp"
#include "apm/harness/ablation.hpp"
#include "apm/harness/gradcheck_suite.hpp"
#include "apm/harness/trainer.hpp"

namespace fs = std::filesystem;
using namespace apm;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<double> lambda;
  std::optional<int> tap_layer;
  bool gt_labels = false;
  bool disable_atp = false;
  bool disable_app = false;
  std::string out = ".";
  std::string data_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value configuration file");
  cmd->add_option("--seed", f.seed, "training seed (data seed for gen-data)");
  cmd->add_option("--frames", f.frames, "sequence length F (9, 27, 81 or 243)");
  cmd->add_option("--lambda", f.lambda, "action-loss weight");
  cmd->add_option("--tap-layer", f.tap_layer, "encoder block feeding the action projector");
  cmd->add_flag("--gt-labels-at-eval", f.gt_labels, "select pose prompts with ground-truth labels at eval");
  cmd->add_flag("--disable-atp", f.disable_atp, "replace text prompts with the plain label branch");
  cmd->add_flag("--disable-app", f.disable_app, "drop the pose prompts");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--data", f.data_dir, "dataset directory (generated in memory when omitted)");
}

ExperimentConfig build_config(const CommonFlags& f, bool seed_is_data) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  if (!f.data_dir.empty()) c.data.dir = f.data_dir;
  if (f.seed) (seed_is_data ? c.data.synthetic.seed : c.train.seed) = *f.seed;
  if (f.frames) c.data.synthetic.frames = *f.frames;
  if (f.lambda) c.train.lambda = *f.lambda;
  if (f.tap_layer) c.model.atp.tap_layer = *f.tap_layer;
  if (f.gt_labels) c.train.gt_labels_at_eval = true;
  if (f.disable_app) c.model.app.enabled = false;
  if (f.disable_atp && c.model.atp.branch == ActionBranch::text) {
    c.model.atp.branch = c.model.app.enabled ? ActionBranch::label : ActionBranch::none;
  }
  return c;
}

data::Dataset load_data(const ExperimentConfig& c, std::optional<int> frames) {
  data::Dataset ds = prepare_dataset(c);
  if (frames && ds.manifest.frames != *frames) {
    throw ConfigError("--frames " + std::to_string(*frames) + " disagrees with dataset F=" +
                      std::to_string(ds.manifest.frames));
  }
  return ds;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

void write_reports(const fs::path& out, const MetricsReport& report, bool plot) {
  io::write_text_file((out / "metrics.csv").string(), format_metrics_csv(report));
  io::write_text_file((out / "summary.csv").string(), format_summary_csv(report));
  if (plot) io::write_text_file((out / "plot.dat").string(), format_plot_data(report));
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (const auto& s : io::split_list(list)) out.push_back(io::parse_u64(s, "--seeds"));
  return out;
}

std::vector<int> parse_ints(const std::string& list, const std::string& what) {
  std::vector<int> out;
  for (const auto& s : io::split_list(list)) out.push_back(static_cast<int>(io::parse_int(s, what)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-prompted 2D-to-3D pose lifting"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool plot = false;
  std::string checkpoint_path;
  std::string mode = "components";
  std::string seeds = "1,2,3";
  std::string sweep_frames = "9,27";

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  auto* train_cmd = app.add_subcommand("train", "train and save the best checkpoint");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* ablate = app.add_subcommand("ablate", "run an ablation matrix");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  for (auto* cmd : {gen, train_cmd, eval_cmd, ablate, gradcheck}) add_common(cmd, flags);
  for (auto* cmd : {train_cmd, eval_cmd}) cmd->add_flag("--plot", plot, "also write per-action bar data");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  ablate->add_option("--mode", mode,
                     "components, length, position, app-params, gt-labels, text-source or atp-components");
  ablate->add_option("--seeds", seeds, "comma-separated training seeds");
  ablate->add_option("--sweep-frames", sweep_frames, "sequence lengths for the length mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    const fs::path out(flags.out);
    fs::create_directories(out);

    if (gen->parsed()) {
      const ExperimentConfig c = build_config(flags, true);
      const auto ds = data::generate_synthetic(c.data.synthetic);
      data::save_dataset(ds, out.string());
      std::printf("wrote %zu train / %zu eval samples to %s\n", ds.train.size(), ds.eval.size(), out.c_str());
    } else if (train_cmd->parsed()) {
      const ExperimentConfig c = build_config(flags, false);
      const auto ds = load_data(c, flags.frames);
      std::string log;
      TrainOutcome outcome;
      try {
        outcome = train(c, ds, [&](const EpochRecord& r) {
          log += format_log_line(r) + "\n";
          io::write_text_file((out / "train.log").string(), log);
        });
      } catch (const TrainingAborted& e) {
        save_checkpoint(e.last_good(), (out / "last_good.ckpt").string());
        throw;
      }
      save_checkpoint(outcome.best, (out / "checkpoint.ckpt").string());
      if (outcome.best.text_embeddings) {
        save_text_embeddings((out / "text_embeddings").string(), *outcome.best.text_embeddings,
                             ds.manifest.action_names);
      }
      write_reports(out, outcome.best_report, plot);
      std::printf("best epoch %d P1 %.3f after %llu steps\n", outcome.best.epoch, outcome.best_report.p1,
                  static_cast<unsigned long long>(outcome.steps));
    } else if (eval_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      ExperimentConfig c = parse_config(ckpt.config_text, checkpoint_path);
      const ExperimentConfig overrides = build_config(flags, false);
      if (!overrides.data.dir.empty()) c.data.dir = overrides.data.dir;
      if (!overrides.data.hard_actions.empty()) c.data.hard_actions = overrides.data.hard_actions;
      const auto ds = load_data(c, flags.frames);
      const auto report = evaluate_checkpoint(ckpt, ds, ds.eval, flags.gt_labels || c.train.gt_labels_at_eval);
      write_reports(out, report, plot);
      std::printf("P1 %.3f P2 %.3f P3 %.3f\n", report.p1, report.p2, report.p3);
    } else if (ablate->parsed()) {
      const ExperimentConfig c = build_config(flags, false);
      AblationOptions options;
      options.mode = parse_ablation_mode(mode);
      options.seeds = parse_seeds(seeds);
      options.frames = parse_ints(sweep_frames, "--sweep-frames");
      const auto rows = run_ablation(c, options, [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); });
      const std::string table = format_ablation_csv(options.mode, rows);
      io::write_text_file((out / "ablation.csv").string(), table);
      std::fputs(table.c_str(), stdout);
    } else if (gradcheck->parsed()) {
      const ExperimentConfig c = build_config(flags, false);
      const auto reports = run_gradcheck_suite(c.train.seed);
      std::string table = "check,entries,max_rel_error,passed\n";
      bool ok = true;
      for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof line, "%s,%zu,%.3e,%d\n", r.name.c_str(), r.checked, r.max_rel_error, r.passed);
        table += line;
        ok = ok && r.passed;
      }
      io::write_text_file((out / "gradcheck.csv").string(), table);
      std::fputs(table.c_str(), stdout);
      if (!ok) throw GradCheckError("at least one check exceeded the tolerance");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
