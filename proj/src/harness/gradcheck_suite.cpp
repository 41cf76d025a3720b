#include "apm/harness/gradcheck_suite.hpp"

#include <map>

#include "apm/harness/losses.hpp"
#include "apm/model/model.hpp"

namespace apm {

namespace {

using V = Var<double>;

V leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return V::leaf(std::move(t), true);
}

/// Scalar probe Σ w ⊙ out with fixed random weights, so every output
/// element contributes a distinct amount.
class Probe {
 public:
  explicit Probe(std::uint64_t seed) : rng_(seed) {}

  V operator()(const V& out) {
    auto it = weights_.find(out.shape());
    if (it == weights_.end()) {
      Tensor<double> w(out.shape());
      for (auto& v : w.data()) v = rng_.uniform(-1.0, 1.0);
      it = weights_.emplace(out.shape(), std::move(w)).first;
    }
    return ops::sum(ops::mul(out, V::constant(it->second)));
  }

 private:
  Rng rng_;
  std::map<Shape, Tensor<double>> weights_;
};

std::vector<NamedLeaf> trainable_leaves(const ParameterStore<double>& store) {
  std::vector<NamedLeaf> out;
  for (const auto& p : store.all()) {
    if (p.trainable()) out.emplace_back(p.name, p.var);
  }
  return out;
}

void set_values(const ParameterStore<double>& store, const std::string& name, Rng& rng) {
  auto var = store.get(name).var;
  for (auto& v : var.mutable_value().data()) v = rng.uniform(0.3, 0.9);
}

}  // namespace

ModelConfig micro_model_config() {
  ModelConfig c;
  c.frames = 9;
  c.joints = 4;
  c.actions = 2;
  c.encoder.channels = 8;
  c.atp.context_tokens = 2;
  c.app.prompts = 2;
  return c;
}

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed, const GradCheckOptions& opt) {
  std::vector<GradCheckReport> reports;
  Rng rng(derive_seed(seed, "gradcheck"));
  Probe probe(derive_seed(seed, "probe"));
  auto check = [&](const std::string& name, const std::function<V()>& f, std::vector<NamedLeaf> leaves) {
    reports.push_back(grad_check(name, f, std::move(leaves), opt));
  };

  // Elementwise and shape ops.
  {
    V a = leaf({3, 4}, rng), b = leaf({3, 4}, rng), row = leaf({4}, rng);
    check("add", [&] { return probe(ops::add(a, b)); }, {{"a", a}, {"b", b}});
    check("sub", [&] { return probe(ops::sub(a, b)); }, {{"a", a}, {"b", b}});
    check("mul", [&] { return probe(ops::mul(a, b)); }, {{"a", a}, {"b", b}});
    check("scale", [&] { return probe(ops::scale(a, 1.7)); }, {{"a", a}});
    V s = leaf({1}, rng);
    check("mul_scalar", [&] { return probe(ops::mul_scalar(a, s)); }, {{"a", a}, {"s", s}});
    check("add_row", [&] { return probe(ops::add_row(a, row)); }, {{"a", a}, {"row", row}});
    check("mul_row", [&] { return probe(ops::mul_row(a, row)); }, {{"a", a}, {"row", row}});
    check("relu", [&] { return probe(ops::relu(a)); }, {{"a", a}});
    V pos = leaf({3, 4}, rng, 0.5, 2.0);
    check("log", [&] { return probe(ops::log(pos)); }, {{"x", pos}});
    V m = leaf({4, 5}, rng), n = leaf({5, 3}, rng);
    check("matmul", [&] { return probe(ops::matmul(m, n)); }, {{"a", m}, {"b", n}});
    check("transpose", [&] { return probe(ops::transpose(m)); }, {{"a", m}});
    V bias = leaf({3}, rng);
    check("linear", [&] { return probe(ops::linear(m, n, bias)); }, {{"x", m}, {"w", n}, {"b", bias}});
    check("reshape", [&] { return probe(ops::reshape(m, {2, 10})); }, {{"a", m}});
    V cube = leaf({2, 3, 4}, rng);
    check("slice", [&] { return probe(ops::slice(cube, 1, 1, 3)); }, {{"a", cube}});
    check("concat", [&] { return probe(ops::concat<double>({a, b}, 1)); }, {{"a", a}, {"b", b}});
    check("take", [&] { return ops::take(a, 5); }, {{"a", a}});
    check("sum", [&] { return ops::sum(ops::mul(a, a)); }, {{"a", a}});
    check("mean", [&] { return ops::mean(ops::mul(a, b)); }, {{"a", a}, {"b", b}});
    check("mean_rows", [&] { return probe(ops::mean_rows(a)); }, {{"a", a}});
    check("row_norm", [&] { return probe(ops::row_norm(a)); }, {{"a", a}});
    V v = leaf({1, 4}, rng);
    check("cosine_rows", [&] { return probe(ops::cosine_rows(a, v)); }, {{"rows", a}, {"v", v}});
    check("softmax_axis0", [&] { return probe(ops::softmax(a, 0)); }, {{"a", a}});
    check("softmax_axis1", [&] { return probe(ops::softmax(a, 1)); }, {{"a", a}});
    V gain = leaf({4}, rng, 0.5, 1.5);
    check("layer_norm", [&] { return probe(ops::layer_norm(a, gain, row)); },
          {{"x", a}, {"gain", gain}, {"bias", row}});
    Tensor<double> rm({4}, 0.0), rv({4}, 1.0);
    V rows = leaf({6, 4}, rng);
    check("batch_norm", [&] {
            ops::BatchNormState<double> st{&rm, &rv, 0.1, 1e-5};
            return probe(ops::batch_norm(rows, gain, row, st, true));
          },
          {{"x", rows}, {"gain", gain}, {"bias", row}});
    check("dropout", [&] {
            Rng mask(seed);
            return probe(ops::dropout(a, 0.3, true, mask));
          },
          {{"a", a}});
    V seq = leaf({9, 3}, rng), kernel = leaf({3, 3, 2}, rng), cb = leaf({2}, rng);
    check("dilated_conv1d", [&] { return probe(ops::dilated_conv1d(seq, kernel, 3, cb)); },
          {{"x", seq}, {"kernel", kernel}, {"bias", cb}});
    V q = leaf({3, 4}, rng), k = leaf({5, 4}, rng), val = leaf({5, 4}, rng);
    check("scaled_dot_attention", [&] { return probe(ops::scaled_dot_attention(q, k, val)); },
          {{"q", q}, {"k", k}, {"v", val}});
  }

  // Model modules on micro-sized parameters.
  const ModelConfig micro = micro_model_config();
  const auto C = static_cast<std::size_t>(micro.encoder.channels);
  const auto K = static_cast<std::size_t>(micro.actions);
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "modules"));
    TextPromptBank<double> bank(store, "atp", 2, K, C, init);
    TextEncoder<double> text(store, "atp.text", 3, C, 2, init);
    check("encode_text", [&] { return probe(text(assemble_prompts(bank))); }, trainable_leaves(store));
  }
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "projector"));
    ActionProjector<double> projector(store, "p", ProjectorKind::tcn, 2, C, init);
    V z = leaf({9, C}, rng);
    auto leaves = trainable_leaves(store);
    leaves.emplace_back("z", z);
    check("action_projector", [&] { return probe(projector(z)); }, leaves);
  }
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "p2t"));
    PoseToText<double> p2t(store, "p2t", C, init);
    set_values(store, "p2t.beta", rng);
    V t = leaf({K, C}, rng), z0 = leaf({9, C}, rng);
    auto leaves = trainable_leaves(store);
    leaves.emplace_back("t", t);
    leaves.emplace_back("z0", z0);
    check("pose_to_text", [&] { return probe(p2t(t, z0)); }, leaves);
  }
  {
    V t = leaf({K, C}, rng), a = leaf({1, C}, rng);
    check("classify", [&] { return probe(classify(t, a, 0.07)); }, {{"t_bar", t}, {"a", a}});
  }
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "app"));
    PosePrompts<double> app(store, "app", K, 2, C, 1, 2, init);
    set_values(store, "app.gamma", rng);
    V zd = leaf({1, C}, rng);
    auto leaves = trainable_leaves(store);
    leaves.emplace_back("zd", zd);
    check("app_refine", [&] { return probe(app.refine(zd, 1)); }, leaves);
  }
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "head"));
    Linear<double> head(store, "head", C, 12, init);
    V z = leaf({1, C}, rng);
    auto leaves = trainable_leaves(store);
    leaves.emplace_back("z", z);
    check("output_head", [&] { return probe(ops::reshape(head(z), {4, 3})); }, leaves);
  }
  {
    V pred = leaf({2, 4, 3}, rng);
    Tensor<double> gt({2, 4, 3});
    for (auto& x : gt.data()) x = rng.uniform(-1.0, 1.0);
    check("pose_loss", [&] { return pose_loss(pred, gt); }, {{"pred", pred}});
    V logits = leaf({1, 3}, rng);
    check("action_loss", [&] { return action_loss(ops::softmax(logits, 1), 2); }, {{"logits", logits}});
  }

  // Encoder alone and the full model.
  std::vector<V> inputs;
  std::vector<Tensor<double>> targets;
  for (int i = 0; i < 2; ++i) {
    Tensor<double> x({9, 4, 2});
    for (auto& e : x.data()) e = rng.uniform(-1.0, 1.0);
    inputs.push_back(V::constant(std::move(x)));
  }
  Tensor<double> gt({2, 4, 3});
  for (auto& e : gt.data()) e = rng.uniform(-1.0, 1.0);
  const std::vector<int> labels{0, 1};
  {
    ParameterStore<double> store;
    Rng init(derive_seed(seed, "encoder"));
    TemporalConvEncoder<double> encoder(store, micro.encoder, 9, 4, init);
    Linear<double> head(store, "head", C, 12, init);
    check("encoder", [&] {
            auto out = encoder.forward(inputs, true);
            std::vector<V> poses;
            for (auto& o : out) poses.push_back(ops::reshape(head(o.zd()), {4, 3}));
            return pose_loss(ops::reshape(ops::concat(poses, 0), {2, 4, 3}), gt);
          },
          trainable_leaves(store));
  }
  {
    ApmModel<double> model(micro, seed);
    set_values(model.parameters(), "atp.p2t.beta", rng);
    set_values(model.parameters(), "app.gamma", rng);
    ForwardOptions<double> options;
    options.training = true;
    options.select_with_labels = true;
    check("full_model",
          [&] {
            auto r = model.forward(inputs, labels, options);
            V poses = ops::reshape(ops::concat(r.poses, 0), {2, 4, 3});
            return total_loss(pose_loss(poses, gt), mean_action_loss(r.probabilities, labels), 0.1);
          },
          trainable_leaves(model.parameters()));
  }
  return reports;
}

}  // namespace apm
