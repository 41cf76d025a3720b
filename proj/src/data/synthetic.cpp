#include "apm/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "apm/core/rng.hpp"
#include "apm/data/normalize.hpp"

namespace apm::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* const kActionNames[] = {
    "Walking", "Eating",   "Greeting", "Directions",  "Phoning",      "Purchases", "Smoking",
    "Waiting", "Photo",    "Discussion", "WalkDog",   "WalkTogether", "Posing",    "SittingDown",
    "Sitting"};

// Rest pose of the first eight joints: pelvis, thorax, head, left hand,
// right hand, left foot, right foot, spine.
const std::array<double, 3> kRest[] = {{0, 0, 0},     {0, 500, 0},    {0, 720, 20},
                                       {-380, 120, 60}, {380, 120, 60}, {-150, -900, 0},
                                       {150, -900, 0}, {0, 250, -20}};

const int kGroups[] = {0, 0, 0, 1, 2, 3, 3, 0};

int hard_count(int actions) { return std::max(1, static_cast<int>(std::lround(actions / 5.0))); }

std::string action_name(int k, int actions) {
  constexpr int named = static_cast<int>(std::size(kActionNames));
  if (actions <= named) {
    // Hard motifs take the names from the tail of the list.
    return kActionNames[k < actions - hard_count(actions) ? k : named - actions + k];
  }
  return "Action" + std::to_string(k);
}

}  // namespace

void require_supported_frames(int frames) {
  if (std::find(kSupportedFrames.begin(), kSupportedFrames.end(), frames) == kSupportedFrames.end()) {
    throw ConfigError("unsupported sequence length F=" + std::to_string(frames) +
                      "; supported values are 9, 27, 81, 243");
  }
}

int joint_group(int joint) {
  if (joint < 8) return kGroups[joint];
  return joint % kJointGroups;
}

std::vector<std::array<double, 3>> rest_skeleton(int joints) {
  std::vector<std::array<double, 3>> rest(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    if (j < 8) {
      rest[j] = kRest[j];
    } else {
      // Extra joints sit between two of the base joints.
      const auto& a = kRest[1 + (j % 7)];
      const auto& b = kRest[1 + ((j + 3) % 7)];
      for (int c = 0; c < 3; ++c) rest[j][c] = 0.5 * (a[c] + b[c]);
    }
  }
  return rest;
}

std::vector<ActionMotif> default_motifs(int actions, int joints) {
  Rng rng(derive_seed(0xA11CEULL, static_cast<std::uint64_t>(actions) * 4096 + joints));
  std::vector<ActionMotif> motifs;
  for (int k = 0; k < actions; ++k) {
    ActionMotif m;
    m.name = action_name(k, actions);
    m.hard = k >= actions - hard_count(actions);
    const double offset_scale = 120.0;
    const double depth_offset_scale = m.hard ? 220.0 : 120.0;
    m.base_offset.resize(static_cast<std::size_t>(joints));
    for (int j = 1; j < joints; ++j) {
      m.base_offset[j] = {rng.normal(0.0, offset_scale), rng.normal(0.0, offset_scale),
                          rng.normal(0.0, depth_offset_scale)};
    }
    for (int g = 0; g < kJointGroups; ++g) {
      m.frequency[g] = rng.uniform(0.6, 2.4);
      m.amplitude[g] = rng.uniform(40.0, 120.0);
    }
    m.depth_excursion = m.hard ? 150.0 : rng.uniform(20.0, 60.0);
    m.drift = rng.uniform(-300.0, 300.0);
    m.noise = 8.0;
    motifs.push_back(std::move(m));
  }
  return motifs;
}

PoseSample generate_sample(const SyntheticConfig& cfg, const ActionMotif& motif, int action,
                           std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  const int F = cfg.frames;
  const int J = cfg.joints;
  const int center = F / 2;
  const auto rest = rest_skeleton(J);

  const double phase = rng.uniform(0.0, kTwoPi);
  const double speed = std::clamp(1.0 + 0.1 * rng.normal(), 0.7, 1.3);
  const double body_scale = std::clamp(1.0 + 0.03 * rng.normal(), 0.9, 1.1);
  const double tx = rng.uniform(-150.0, 150.0);
  const double ty = rng.uniform(-100.0, 100.0);
  std::vector<std::array<double, 3>> jitter(static_cast<std::size_t>(J));
  for (int j = 1; j < J; ++j) {
    for (int c = 0; c < 3; ++c) jitter[j][c] = rng.normal(0.0, motif.noise);
  }

  // Body-frame (root-relative) joint position at time t seconds from the center frame.
  auto body = [&](int j, double t) -> std::array<double, 3> {
    if (j == 0) return {0.0, 0.0, 0.0};
    const int g = joint_group(j);
    const double theta = kTwoPi * motif.frequency[g] * speed * t + phase + 0.7 * j;
    const double depth_weight = g == 0 ? 0.4 : 1.0;
    std::array<double, 3> p{};
    for (int c = 0; c < 3; ++c) p[c] = body_scale * (rest[j][c] + motif.base_offset[j][c]) + jitter[j][c];
    p[0] += motif.amplitude[g] * std::sin(theta);
    p[1] += 0.5 * motif.amplitude[g] * std::cos(2.0 * theta);
    p[2] += depth_weight * motif.depth_excursion * std::cos(theta);
    return p;
  };

  PoseSample s;
  s.action = action;
  s.input2d = Tensor<float>({static_cast<std::size_t>(F), static_cast<std::size_t>(J), 2});
  for (int f = 0; f < F; ++f) {
    const double t = (f - center) / cfg.fps;
    const double root_x = tx + motif.drift * t;
    for (int j = 0; j < J; ++j) {
      const auto p = body(j, t);
      const double px = cfg.image_width / 2.0 + cfg.pixels_per_mm * (root_x + p[0]) +
                        rng.normal(0.0, cfg.pixel_noise);
      const double py = cfg.image_height / 2.0 - cfg.pixels_per_mm * (ty + p[1]) +
                        rng.normal(0.0, cfg.pixel_noise);
      const auto n = normalize_2d({px, py}, cfg.image_width, cfg.image_height);
      const std::size_t base = (static_cast<std::size_t>(f) * J + j) * 2;
      s.input2d[base] = static_cast<float>(std::clamp(n[0], -1.0, 1.0));
      s.input2d[base + 1] = static_cast<float>(std::clamp(n[1], -1.0, 1.0));
    }
  }
  s.target3d = Tensor<float>({static_cast<std::size_t>(J), 3});
  for (int j = 1; j < J; ++j) {
    const auto p = body(j, 0.0);
    for (int c = 0; c < 3; ++c) s.target3d[static_cast<std::size_t>(j) * 3 + c] = static_cast<float>(p[c]);
  }
  return s;
}

Dataset generate_synthetic(const SyntheticConfig& cfg, const std::vector<ActionMotif>& motifs) {
  if (cfg.actions < 2) throw ConfigError("synthetic data needs K >= 2 actions");
  if (cfg.joints < 4) throw ConfigError("synthetic data needs J >= 4 joints");
  require_supported_frames(cfg.frames);
  if (cfg.train_per_action < 1 || cfg.eval_per_action < 1) {
    throw ConfigError("samples per action must be positive");
  }
  if (static_cast<int>(motifs.size()) != cfg.actions) {
    throw ConfigError("expected " + std::to_string(cfg.actions) + " motifs, got " +
                      std::to_string(motifs.size()));
  }
  for (const auto& m : motifs) {
    if (static_cast<int>(m.base_offset.size()) != cfg.joints) {
      throw ConfigError("motif '" + m.name + "' does not cover " + std::to_string(cfg.joints) + " joints");
    }
  }

  Dataset ds;
  auto& man = ds.manifest;
  man.actions = cfg.actions;
  man.frames = cfg.frames;
  man.joints = cfg.joints;
  man.seed = cfg.seed;
  for (const auto& m : motifs) {
    man.action_names.push_back(m.name);
    if (m.hard) man.hard_actions.push_back(m.name);
  }

  // Labels interleave so any prefix of a split stays balanced. Each sample
  // draws from its own stream keyed by (seed, split, index).
  auto make_split = [&](int per_action, std::uint64_t split_id) {
    std::vector<PoseSample> out;
    const int total = per_action * cfg.actions;
    out.reserve(static_cast<std::size_t>(total));
    const std::uint64_t split_seed = derive_seed(cfg.seed, split_id);
    for (int i = 0; i < total; ++i) {
      const int action = i % cfg.actions;
      out.push_back(generate_sample(cfg, motifs[action], action,
                                    derive_seed(split_seed, static_cast<std::uint64_t>(i))));
    }
    return out;
  };
  ds.train = make_split(cfg.train_per_action, hash_tag("train"));
  ds.eval = make_split(cfg.eval_per_action, hash_tag("eval"));
  man.train_count = ds.train.size();
  man.eval_count = ds.eval.size();
  return ds;
}

Dataset generate_synthetic(const SyntheticConfig& config) {
  return generate_synthetic(config, default_motifs(config.actions, config.joints));
}

}  // namespace apm::data
