#include "apm/harness/ablation.hpp"

#include <cstdio>
#include <map>

#include "apm/harness/trainer.hpp"
#include "apm/model/encoder.hpp"

namespace apm {

namespace {

ExperimentConfig with_components(ExperimentConfig c, ActionBranch branch, bool app) {
  c.model.atp.branch = branch;
  c.model.app.enabled = app;
  return c;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

const char* to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::components: return "components";
    case AblationMode::length: return "length";
    case AblationMode::position: return "position";
    case AblationMode::app_params: return "app-params";
    case AblationMode::gt_labels: return "gt-labels";
    case AblationMode::text_source: return "text-source";
    case AblationMode::atp_components: return "atp-components";
  }
  return "?";
}

AblationMode parse_ablation_mode(const std::string& s) {
  for (auto m : {AblationMode::components, AblationMode::length, AblationMode::position, AblationMode::app_params,
                 AblationMode::gt_labels, AblationMode::text_source, AblationMode::atp_components}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown ablation mode '" + s +
                    "' (expected components, length, position, app-params, gt-labels, text-source or "
                    "atp-components)");
}

std::vector<AblationVariant> ablation_variants(const ExperimentConfig& base, const AblationOptions& options) {
  std::vector<AblationVariant> out;
  const ExperimentConfig full = with_components(base, ActionBranch::text, true);
  switch (options.mode) {
    case AblationMode::components:
      out.push_back({"baseline", with_components(base, ActionBranch::none, false)});
      out.push_back({"label", with_components(base, ActionBranch::label, false)});
      out.push_back({"atp", with_components(base, ActionBranch::text, false)});
      out.push_back({"app", with_components(base, ActionBranch::label, true)});
      out.push_back({"full", full});
      break;
    case AblationMode::length:
      for (int f : options.frames) {
        data::require_supported_frames(f);
        for (const auto& [name, branch, app] : {std::tuple{"baseline", ActionBranch::none, false},
                                               std::tuple{"full", ActionBranch::text, true}}) {
          ExperimentConfig c = with_components(base, branch, app);
          c.data.synthetic.frames = f;
          out.push_back({std::string(name) + "@F=" + std::to_string(f), c});
        }
      }
      break;
    case AblationMode::position: {
      // Taps shorter than the projector's receptive field cannot feed it.
      const auto extents = temporal_tap_extents(base.data.synthetic.frames, base.model.encoder.kernel_width);
      const std::size_t needed =
          base.model.atp.projector == ProjectorKind::tcn ? 1 + 2 * static_cast<std::size_t>(base.model.atp.projector_blocks) : 1;
      for (std::size_t layer = 1; layer <= extents.size(); ++layer) {
        if (extents[layer - 1] < needed) continue;
        ExperimentConfig c = full;
        c.model.atp.tap_layer = static_cast<int>(layer);
        out.push_back({"tap=" + std::to_string(layer), c});
      }
      break;
    }
    case AblationMode::app_params:
      for (int d : options.decoder_layers) {
        for (int l : options.prompt_counts) {
          ExperimentConfig c = full;
          c.model.app.layers = d;
          c.model.app.prompts = l;
          out.push_back({"D=" + std::to_string(d) + "/L=" + std::to_string(l), c});
        }
      }
      break;
    case AblationMode::gt_labels:
      out.push_back({"predicted", full});
      out.push_back({"ground-truth", full, true});
      break;
    case AblationMode::text_source: {
      ExperimentConfig learnable = full;
      learnable.model.atp.text_source = TextSource::learnable;
      out.push_back({"prompt", full});
      out.push_back({"learnable", learnable});
      break;
    }
    case AblationMode::atp_components: {
      ExperimentConfig no_p2t = full;
      no_p2t.model.atp.pose_to_text = false;
      ExperimentConfig pooled = full;
      pooled.model.atp.projector = ProjectorKind::pool;
      out.push_back({"full", full});
      out.push_back({"no-p2t", no_p2t});
      out.push_back({"pool-projector", pooled});
      break;
    }
  }
  return out;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const AblationOptions& options,
                                      const std::function<void(const std::string&)>& progress) {
  if (options.seeds.empty()) throw ConfigError("ablation needs at least one seed");
  const auto variants = ablation_variants(base, options);
  std::map<int, data::Dataset> datasets;  // keyed by F
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    const int frames = v.config.data.synthetic.frames;
    if (!datasets.count(frames)) datasets.emplace(frames, prepare_dataset(v.config));
    const auto& ds = datasets.at(frames);
    AblationRow row;
    row.variant = v.name;
    for (auto seed : options.seeds) {
      ExperimentConfig c = v.config;
      c.train.seed = seed;
      if (progress) progress(v.name + " seed " + std::to_string(seed));
      auto outcome = train(c, ds);
      row.runs.push_back(v.evaluate_with_gt ? evaluate_checkpoint(outcome.best, ds, ds.eval, true)
                                            : outcome.best_report);
    }
    double acc = 0.0;
    bool has_acc = true;
    for (const auto& r : row.runs) {
      row.p1 += r.p1;
      row.p2 += r.p2;
      row.p3 += r.p3;
      if (r.accuracy) acc += *r.accuracy;
      has_acc = has_acc && r.accuracy.has_value();
    }
    const auto n = static_cast<double>(row.runs.size());
    row.p1 /= n;
    row.p2 /= n;
    row.p3 /= n;
    if (has_acc) row.accuracy = acc / n;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_csv(AblationMode mode, const std::vector<AblationRow>& rows) {
  std::string out = "mode,variant,P1,P2,P3,accuracy,seeds\n";
  for (const auto& r : rows) {
    out += std::string(to_string(mode)) + "," + r.variant + "," + num(r.p1) + "," + num(r.p2) + "," + num(r.p3) +
           "," + (r.accuracy ? num(*r.accuracy) : std::string("NA")) + "," + std::to_string(r.runs.size()) + "\n";
  }
  return out;
}

}  // namespace apm
