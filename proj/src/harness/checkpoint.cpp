#include "apm/harness/checkpoint.hpp"

#include <bit>

#include "apm/data/keyvalue.hpp"
#include "apm/data/tensor_io.hpp"

namespace apm {

namespace {

constexpr char kMagic[8] = {'A', 'P', 'M', 'C', 'K', 'P', 'T', '\x1a'};

ParamKind kind_from(std::uint32_t v, std::size_t offset) {
  if (v > 2) throw FormatError("unknown parameter kind " + std::to_string(v), offset);
  return static_cast<ParamKind>(v);
}

}  // namespace

std::vector<SavedParameter> capture_parameters(const ParameterStore<float>& store) {
  std::vector<SavedParameter> out;
  out.reserve(store.size());
  for (const auto& p : store.all()) out.push_back({p.name, p.kind, p.var.value()});
  return out;
}

void restore_parameters(const std::vector<SavedParameter>& saved, ParameterStore<float>& store) {
  if (saved.size() != store.size()) {
    // Find the first name present on one side only.
    for (const auto& p : store.all()) {
      bool found = false;
      for (const auto& s : saved) found = found || s.name == p.name;
      if (!found) throw ConfigError("checkpoint lacks parameter " + p.name);
    }
    for (const auto& s : saved) {
      if (!store.find(s.name)) throw ConfigError("checkpoint parameter " + s.name + " not in model");
    }
  }
  for (const auto& s : saved) {
    const auto* p = store.find(s.name);
    if (!p) throw ConfigError("checkpoint parameter " + s.name + " not in model");
    if (p->var.shape() != s.value.shape()) {
      throw ConfigError("parameter " + s.name + ": checkpoint shape " + shape_string(s.value.shape()) +
                        " vs model " + shape_string(p->var.shape()));
    }
  }
  for (const auto& s : saved) {
    auto var = store.find(s.name)->var;
    var.mutable_value() = s.value;
  }
}

SavedOptimizer capture_optimizer(const Adam<float>& adam) {
  return {adam.steps(), adam.learning_rate(), adam.moments()};
}

void restore_optimizer(const SavedOptimizer& saved, Adam<float>& adam) {
  adam.restore(saved.steps, saved.lr, saved.moments);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  io::put_u32(out, kCheckpointVersion);
  io::put_string(out, c.config_text);
  io::put_u32(out, static_cast<std::uint32_t>(c.epoch));
  io::put_u64(out, std::bit_cast<std::uint64_t>(c.best_p1));
  io::put_u32(out, static_cast<std::uint32_t>(c.parameters.size()));
  for (const auto& p : c.parameters) {
    io::put_string(out, p.name);
    io::put_u32(out, static_cast<std::uint32_t>(p.kind));
    io::put_tensor(out, p.value);
  }
  io::put_u64(out, c.optimizer.steps);
  io::put_u64(out, std::bit_cast<std::uint64_t>(c.optimizer.lr));
  io::put_u32(out, static_cast<std::uint32_t>(c.optimizer.moments.size()));
  for (const auto& [name, m] : c.optimizer.moments) {
    io::put_string(out, name);
    io::put_tensor(out, m.first);
    io::put_tensor(out, m.second);
  }
  io::put_u32(out, c.text_embeddings ? 1 : 0);
  if (c.text_embeddings) io::put_tensor(out, *c.text_embeddings);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader in(bytes);
  in.expect_magic(kMagic, "checkpoint");
  const std::size_t version_at = in.offset();
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  Checkpoint c;
  c.config_text = in.string();
  c.epoch = static_cast<int>(in.u32());
  c.best_p1 = std::bit_cast<double>(in.u64());
  const auto count = in.u32();
  std::string current = "<header>";
  try {
    for (std::uint32_t i = 0; i < count; ++i) {
      SavedParameter p;
      p.name = in.string();
      current = p.name;
      const std::size_t at = in.offset();
      p.kind = kind_from(in.u32(), at);
      p.value = in.tensor();
      c.parameters.push_back(std::move(p));
    }
    current = "<optimizer>";
    c.optimizer.steps = in.u64();
    c.optimizer.lr = std::bit_cast<double>(in.u64());
    const auto moments = in.u32();
    for (std::uint32_t i = 0; i < moments; ++i) {
      std::string name = in.string();
      current = "moments of " + name;
      AdamMoments<float> m;
      m.first = in.tensor();
      m.second = in.tensor();
      c.optimizer.moments.emplace(std::move(name), std::move(m));
    }
    current = "<text embeddings>";
    if (in.u32() != 0) c.text_embeddings = in.tensor();
  } catch (const FormatError& e) {
    throw FormatError("checkpoint parameter " + current + ": " + e.detail(), e.offset());
  }
  if (!in.done()) throw FormatError("trailing bytes after checkpoint", in.offset());
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  io::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.detail(), e.offset());
  }
}

void save_text_embeddings(const std::string& stem, const Tensor<float>& t, const std::vector<std::string>& actions) {
  if (t.rank() != 2 || t.dim(0) != actions.size()) {
    throw DimensionError("text embeddings " + shape_string(t.shape()) + " do not match " +
                         std::to_string(actions.size()) + " action names");
  }
  io::save_tensor(stem + ".bin", t);
  std::string names;
  for (const auto& a : actions) names += a + "\n";
  io::write_text_file(stem + ".txt", names);
}

Tensor<float> load_text_embeddings(const std::string& stem, const std::vector<std::string>& actions) {
  const Tensor<float> t = io::load_tensor(stem + ".bin");
  std::vector<std::string> names;
  for (const auto& kv : io::split_list(io::read_text_file(stem + ".txt"), '\n')) {
    if (!kv.empty()) names.push_back(kv);
  }
  if (t.rank() != 2 || t.dim(0) != names.size()) {
    throw ValidationError(stem + ": tensor " + shape_string(t.shape()) + " vs " + std::to_string(names.size()) +
                          " names");
  }
  const std::size_t C = t.dim(1);
  Tensor<float> out({actions.size(), C});
  for (std::size_t k = 0; k < actions.size(); ++k) {
    std::size_t row = names.size();
    for (std::size_t r = 0; r < names.size(); ++r) {
      if (names[r] == actions[k]) row = r;
    }
    if (row == names.size()) throw ValidationError(stem + ": no embedding for action " + actions[k]);
    for (std::size_t c = 0; c < C; ++c) out[k * C + c] = t[row * C + c];
  }
  return out;
}

}  // namespace apm
