#include "apm/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "apm/data/keyvalue.hpp"
#include "apm/data/tensor_io.hpp"

namespace apm::data {

namespace fs = std::filesystem;

std::vector<int> Dataset::hard_action_indices() const {
  std::vector<int> out;
  for (const auto& name : manifest.hard_actions) out.push_back(action_index(name));
  return out;
}

int Dataset::action_index(const std::string& name) const {
  const auto& names = manifest.action_names;
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown action name '" + name + "'");
  return static_cast<int>(it - names.begin());
}

void validate(const Dataset& dataset) {
  const auto& m = dataset.manifest;
  if (m.version != kDatasetVersion) {
    throw ValidationError("unsupported dataset version " + std::to_string(m.version));
  }
  if (m.actions < 1 || m.frames < 1 || m.joints < 1) {
    throw ValidationError("manifest dimensions must be positive");
  }
  if (static_cast<int>(m.action_names.size()) != m.actions) {
    throw ValidationError("manifest K=" + std::to_string(m.actions) + " but " +
                          std::to_string(m.action_names.size()) + " action names");
  }
  std::set<std::string> distinct(m.action_names.begin(), m.action_names.end());
  if (distinct.size() != m.action_names.size()) throw ValidationError("action names are not distinct");
  for (const auto& h : m.hard_actions) {
    if (!distinct.count(h)) throw ValidationError("hard action '" + h + "' is not an action name");
  }
  if (m.train_count != dataset.train.size() || m.eval_count != dataset.eval.size()) {
    throw ValidationError("manifest counts (" + std::to_string(m.train_count) + ", " +
                          std::to_string(m.eval_count) + ") do not match stored samples (" +
                          std::to_string(dataset.train.size()) + ", " +
                          std::to_string(dataset.eval.size()) + ")");
  }
  const Shape in_shape{static_cast<std::size_t>(m.frames), static_cast<std::size_t>(m.joints), 2};
  const Shape out_shape{static_cast<std::size_t>(m.joints), 3};
  auto check = [&](const std::vector<PoseSample>& samples, const char* split) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const std::string where = std::string(split) + " sample " + std::to_string(i);
      if (s.input2d.shape() != in_shape) {
        throw ValidationError(where + ": input2d shape " + shape_string(s.input2d.shape()) +
                              ", manifest expects " + shape_string(in_shape));
      }
      if (s.target3d.shape() != out_shape) {
        throw ValidationError(where + ": target3d shape " + shape_string(s.target3d.shape()) +
                              ", manifest expects " + shape_string(out_shape));
      }
      if (s.action < 0 || s.action >= m.actions) {
        throw ValidationError(where + ": label " + std::to_string(s.action) +
                              " outside manifest K=" + std::to_string(m.actions));
      }
      if (s.target3d[0] != 0.0f || s.target3d[1] != 0.0f || s.target3d[2] != 0.0f) {
        throw ValidationError(where + ": target3d root joint is not at the origin");
      }
    }
  };
  check(dataset.train, "train");
  check(dataset.eval, "eval");
}

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  os << "version = " << m.version << '\n'
     << "K = " << m.actions << '\n'
     << "F = " << m.frames << '\n'
     << "J = " << m.joints << '\n'
     << "seed = " << m.seed << '\n'
     << "action_names = " << io::join_list(m.action_names) << '\n'
     << "hard_actions = " << io::join_list(m.hard_actions) << '\n'
     << "train_count = " << m.train_count << '\n'
     << "eval_count = " << m.eval_count << '\n';
  return os.str();
}

DatasetManifest parse_manifest(const std::string& text, const std::string& origin) {
  DatasetManifest m;
  std::set<std::string> seen;
  for (const auto& kv : io::parse_key_values(text, origin)) {
    const std::string what = origin + ":" + std::to_string(kv.line) + " " + kv.key;
    if (!seen.insert(kv.key).second) throw ConfigError(what + ": duplicate key");
    if (kv.key == "version") m.version = static_cast<int>(io::parse_int(kv.value, what));
    else if (kv.key == "K") m.actions = static_cast<int>(io::parse_int(kv.value, what));
    else if (kv.key == "F") m.frames = static_cast<int>(io::parse_int(kv.value, what));
    else if (kv.key == "J") m.joints = static_cast<int>(io::parse_int(kv.value, what));
    else if (kv.key == "seed") m.seed = io::parse_u64(kv.value, what);
    else if (kv.key == "action_names") m.action_names = io::split_list(kv.value);
    else if (kv.key == "hard_actions") m.hard_actions = io::split_list(kv.value);
    else if (kv.key == "train_count") m.train_count = io::parse_u64(kv.value, what);
    else if (kv.key == "eval_count") m.eval_count = io::parse_u64(kv.value, what);
    else throw ConfigError(what + ": unknown manifest key");
  }
  for (const char* required : {"version", "K", "F", "J", "action_names", "train_count", "eval_count"}) {
    if (!seen.count(required)) throw ConfigError(origin + ": missing manifest key '" + required + "'");
  }
  if (m.version != kDatasetVersion) {
    throw ValidationError(origin + ": unsupported dataset version " + std::to_string(m.version));
  }
  return m;
}

std::vector<std::uint8_t> encode_samples(const std::vector<PoseSample>& samples) {
  std::vector<std::uint8_t> out;
  for (const auto& s : samples) {
    io::put_tensor(out, s.input2d);
    io::put_tensor(out, s.target3d);
    io::put_u32(out, static_cast<std::uint32_t>(s.action));
  }
  return out;
}

std::vector<PoseSample> decode_samples(const std::vector<std::uint8_t>& bytes) {
  std::vector<PoseSample> out;
  io::ByteReader reader(bytes);
  while (!reader.done()) {
    PoseSample s;
    s.input2d = reader.tensor();
    s.target3d = reader.tensor();
    s.action = static_cast<int>(reader.u32());
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::string& directory) {
  validate(dataset);
  fs::create_directories(directory);
  const fs::path dir(directory);
  io::write_text_file((dir / "manifest.txt").string(), format_manifest(dataset.manifest));
  io::write_file((dir / "train.bin").string(), encode_samples(dataset.train));
  io::write_file((dir / "eval.bin").string(), encode_samples(dataset.eval));
}

Dataset load_dataset(const std::string& directory) {
  const fs::path dir(directory);
  Dataset ds;
  const std::string manifest_path = (dir / "manifest.txt").string();
  ds.manifest = parse_manifest(io::read_text_file(manifest_path), manifest_path);
  auto load_split = [&](const char* file) {
    const std::string path = (dir / file).string();
    try {
      return decode_samples(io::read_file(path));
    } catch (const FormatError& e) {
      throw FormatError(path + ": " + e.detail(), e.offset());
    }
  };
  ds.train = load_split("train.bin");
  ds.eval = load_split("eval.bin");
  validate(ds);
  return ds;
}

}  // namespace apm::data
