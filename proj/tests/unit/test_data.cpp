#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "apm/core/rng.hpp"
#include "apm/data/keyvalue.hpp"
#include "apm/data/normalize.hpp"
#include "apm/data/synthetic.hpp"
#include "apm/data/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace apm;
using namespace apm::data;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("apm_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_sample(const PoseSample& a, const PoseSample& b) {
  return a.action == b.action && a.input2d == b.input2d && a.target3d == b.target3d;
}

}  // namespace

TEST(Normalize, CenterOfSquareImageIsOrigin) {
  auto p = normalize_2d({500.0, 500.0}, 1000.0, 1000.0);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[1], 0.0);
}

TEST(Normalize, TopLeftCorner) {
  auto p = normalize_2d({0.0, 0.0}, 1000.0, 1002.0);
  EXPECT_DOUBLE_EQ(p[0], -1.0);
  EXPECT_DOUBLE_EQ(p[1], -1002.0 / 1000.0);
}

TEST(Normalize, RoundTrip) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double w = rng.uniform(10.0, 4000.0), h = rng.uniform(10.0, 4000.0);
    const Point2 p{rng.uniform(0.0, w), rng.uniform(0.0, h)};
    const auto back = denormalize_2d(normalize_2d(p, w, h), w, h);
    EXPECT_NEAR(back[0], p[0], 1e-6);
    EXPECT_NEAR(back[1], p[1], 1e-6);
  }
}

TEST(Normalize, ZeroDimensionsRejected) {
  EXPECT_THROW(normalize_2d({1.0, 1.0}, 0.0, 10.0), ConfigError);
  EXPECT_THROW(normalize_2d({1.0, 1.0}, 10.0, 0.0), ConfigError);
}

TEST(Synthetic, UnsupportedFramesListsSupported) {
  SyntheticConfig c;
  c.frames = 10;
  try {
    generate_synthetic(c);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (int f : kSupportedFrames) EXPECT_NE(msg.find(std::to_string(f)), std::string::npos) << msg;
  }
}

TEST(Synthetic, RejectsTooFewActionsOrJoints) {
  SyntheticConfig c;
  c.actions = 1;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
  c.actions = 4;
  c.joints = 3;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
}

TEST(Synthetic, SameSeedIsByteIdentical) {
  SyntheticConfig c;
  c.train_per_action = 5;
  c.eval_per_action = 2;
  const auto a = generate_synthetic(c), b = generate_synthetic(c);
  EXPECT_EQ(encode_samples(a.train), encode_samples(b.train));
  EXPECT_EQ(encode_samples(a.eval), encode_samples(b.eval));
  EXPECT_EQ(format_manifest(a.manifest), format_manifest(b.manifest));
  c.seed = 2;
  EXPECT_NE(encode_samples(generate_synthetic(c).train), encode_samples(a.train));
}

TEST(Synthetic, CountsAndBalancedLabels) {
  SyntheticConfig c;
  c.actions = 4;
  c.train_per_action = 50;
  const auto ds = generate_synthetic(c);
  ASSERT_EQ(ds.train.size(), 200u);
  std::vector<int> counts(4, 0);
  for (const auto& s : ds.train) counts[s.action]++;
  for (int n : counts) EXPECT_EQ(n, 50);
}

TEST(Synthetic, SampleReproducibleFromItsSeed) {
  SyntheticConfig c;
  c.train_per_action = 3;
  c.eval_per_action = 1;
  const auto motifs = default_motifs(c.actions, c.joints);
  const auto ds = generate_synthetic(c, motifs);
  const auto again = generate_sample(c, motifs[3], 3, derive_seed(derive_seed(c.seed, "train"), 7));
  bool found = false;
  for (const auto& s : ds.train) found = found || same_sample(s, again);
  EXPECT_TRUE(found);
}

TEST(Synthetic, DepthExcursionRaisesDepthVariance) {
  SyntheticConfig c;
  c.actions = 2;
  c.train_per_action = 60;
  c.eval_per_action = 1;
  auto motifs = default_motifs(2, c.joints);
  motifs[1] = motifs[0];
  motifs[0].name = "flat";
  motifs[0].depth_excursion = 0.0;
  motifs[1].name = "deep";
  motifs[1].depth_excursion = 50.0;
  const auto ds = generate_synthetic(c, motifs);
  // Two-pass variance of every non-root z coordinate, per action.
  std::array<double, 2> var{};
  for (int a = 0; a < 2; ++a) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : ds.train) {
      if (s.action != a) continue;
      for (int j = 1; j < c.joints; ++j, ++n) sum += s.target3d[j * 3 + 2];
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : ds.train) {
      if (s.action != a) continue;
      for (int j = 1; j < c.joints; ++j) ss += std::pow(s.target3d[j * 3 + 2] - mean, 2);
    }
    var[a] = ss / static_cast<double>(n);
  }
  EXPECT_LT(var[0], var[1]);
}

TEST(Synthetic, DistinctMotifs) {
  const auto motifs = default_motifs(6, 8);
  for (std::size_t a = 0; a < motifs.size(); ++a) {
    for (std::size_t b = a + 1; b < motifs.size(); ++b) {
      const bool differ = motifs[a].base_offset != motifs[b].base_offset || motifs[a].frequency != motifs[b].frequency ||
                          motifs[a].amplitude != motifs[b].amplitude ||
                          motifs[a].depth_excursion != motifs[b].depth_excursion;
      EXPECT_TRUE(differ) << a << " vs " << b;
    }
  }
}

TEST(Synthetic, HardMotifFlagged) {
  const auto motifs = default_motifs(4, 8);
  EXPECT_TRUE(motifs.back().hard);
  EXPECT_FALSE(motifs.front().hard);
  EXPECT_EQ(generate_synthetic(SyntheticConfig{}).manifest.hard_actions.size(), 1u);
}

class SyntheticInvariants : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SyntheticInvariants, RootAtOriginAndInputInRange) {
  SyntheticConfig c;
  c.seed = GetParam();
  c.train_per_action = 10;
  c.eval_per_action = 5;
  const auto ds = generate_synthetic(c);
  for (const auto* split : {&ds.train, &ds.eval}) {
    for (const auto& s : *split) {
      EXPECT_EQ(s.target3d[0], 0.0f);
      EXPECT_EQ(s.target3d[1], 0.0f);
      EXPECT_EQ(s.target3d[2], 0.0f);
      for (float v : s.input2d.data()) {
        EXPECT_GE(v, -1.0f);
        EXPECT_LE(v, 1.0f);
      }
    }
  }
}

TEST_P(SyntheticInvariants, SplitsDisjoint) {
  SyntheticConfig c;
  c.seed = GetParam();
  c.train_per_action = 10;
  c.eval_per_action = 5;
  const auto ds = generate_synthetic(c);
  std::set<std::vector<float>> train_inputs, train_targets;
  for (const auto& s : ds.train) {
    train_inputs.emplace(s.input2d.data().begin(), s.input2d.data().end());
    train_targets.emplace(s.target3d.data().begin(), s.target3d.data().end());
  }
  for (const auto& s : ds.eval) {
    EXPECT_EQ(train_inputs.count({s.input2d.data().begin(), s.input2d.data().end()}), 0u);
    EXPECT_EQ(train_targets.count({s.target3d.data().begin(), s.target3d.data().end()}), 0u);
  }
}

TEST_P(SyntheticInvariants, NearestCentroidSeparatesActions) {
  SyntheticConfig c;
  c.seed = GetParam();
  const auto ds = generate_synthetic(c);
  const std::size_t D = ds.train[0].target3d.size();
  std::vector<std::vector<double>> centroid(c.actions, std::vector<double>(D, 0.0));
  std::vector<int> count(c.actions, 0);
  for (const auto& s : ds.train) {
    for (std::size_t i = 0; i < D; ++i) centroid[s.action][i] += s.target3d[i];
    count[s.action]++;
  }
  for (int a = 0; a < c.actions; ++a)
    for (auto& v : centroid[a]) v /= count[a];
  int correct = 0;
  for (const auto& s : ds.eval) {
    int best = 0;
    double best_d = 1e300;
    for (int a = 0; a < c.actions; ++a) {
      double d = 0.0;
      for (std::size_t i = 0; i < D; ++i) d += std::pow(s.target3d[i] - centroid[a][i], 2);
      if (d < best_d) best_d = d, best = a;
    }
    correct += best == s.action;
  }
  EXPECT_GE(static_cast<double>(correct) / ds.eval.size(), 0.95);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SyntheticInvariants, ::testing::Values(1u, 2u, 3u, 17u, 99u));

TEST(DatasetIo, SaveLoadBitIdentical) {
  SyntheticConfig c;
  c.train_per_action = 4;
  c.eval_per_action = 2;
  const auto ds = generate_synthetic(c);
  const auto dir = temp_dir("roundtrip");
  save_dataset(ds, dir.string());
  const auto back = load_dataset(dir.string());
  EXPECT_EQ(encode_samples(back.train), encode_samples(ds.train));
  EXPECT_EQ(encode_samples(back.eval), encode_samples(ds.eval));
  EXPECT_EQ(format_manifest(back.manifest), format_manifest(ds.manifest));
  EXPECT_EQ(io::read_file((dir / "train.bin").string()), encode_samples(ds.train));
}

TEST(DatasetIo, TruncatedBlobIsFormatErrorWithOffset) {
  SyntheticConfig c;
  c.train_per_action = 2;
  c.eval_per_action = 1;
  auto bytes = encode_samples(generate_synthetic(c).train);
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2 + 1, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    try {
      decode_samples(part);
      ADD_FAILURE() << "cut at " << cut;
    } catch (const FormatError& e) {
      EXPECT_LE(e.offset(), cut);
      EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    }
  }
}

TEST(DatasetIo, BadMagicIsFormatError) {
  Tensor<float> t({2, 2}, 1.0f);
  std::vector<std::uint8_t> bytes;
  io::put_tensor(bytes, t);
  bytes[0] ^= 0xff;
  EXPECT_THROW(decode_samples(bytes), FormatError);
}

TEST(DatasetIo, ManifestActionCountMismatch) {
  SyntheticConfig c;
  c.train_per_action = 2;
  c.eval_per_action = 1;
  auto ds = generate_synthetic(c);
  ds.train[0].action = c.actions;
  EXPECT_THROW(validate(ds), ValidationError);
  auto dir = temp_dir("mismatch");
  save_dataset(generate_synthetic(c), dir.string());
  std::string manifest = io::read_text_file((dir / "manifest.txt").string());
  const auto at = manifest.find("K = 4");
  ASSERT_NE(at, std::string::npos) << manifest;
  manifest.replace(at, 5, "K = 2");
  io::write_text_file((dir / "manifest.txt").string(), manifest);
  EXPECT_THROW(load_dataset(dir.string()), ValidationError);
}

TEST(DatasetIo, RootOffsetRejected) {
  SyntheticConfig c;
  c.train_per_action = 1;
  c.eval_per_action = 1;
  auto ds = generate_synthetic(c);
  ds.eval[0].target3d[0] = 1.0f;
  EXPECT_THROW(validate(ds), ValidationError);
}
