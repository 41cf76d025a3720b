#include "apm/harness/config.hpp"

#include <charconv>
#include <functional>

#include "apm/core/errors.hpp"
#include "apm/data/keyvalue.hpp"

namespace apm {

namespace {

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

// Field tables keyed by "section.key", kept in output order.
const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using io::parse_bool;
  using io::parse_double;
  using io::parse_int;
  using io::parse_u64;
  auto integer = [](int& (*ref)(C&)) {
    return Field{[ref](C& c, const std::string& v, const std::string& w) {
                   ref(c) = static_cast<int>(parse_int(v, w));
                 },
                 [ref](const C& c) { return std::to_string(ref(const_cast<C&>(c))); }};
  };
  auto real = [](double& (*ref)(C&)) {
    return Field{[ref](C& c, const std::string& v, const std::string& w) { ref(c) = parse_double(v, w); },
                 [ref](const C& c) { return fmt(ref(const_cast<C&>(c))); }};
  };
  auto flag = [](bool& (*ref)(C&)) {
    return Field{[ref](C& c, const std::string& v, const std::string& w) { ref(c) = parse_bool(v, w); },
                 [ref](const C& c) { return fmt(ref(const_cast<C&>(c))); }};
  };
  auto text = [](std::string& (*ref)(C&)) {
    return Field{[ref](C& c, const std::string& v, const std::string&) { ref(c) = v; },
                 [ref](const C& c) { return ref(const_cast<C&>(c)); }};
  };
  auto seed = [](std::uint64_t& (*ref)(C&)) {
    return Field{[ref](C& c, const std::string& v, const std::string& w) { ref(c) = parse_u64(v, w); },
                 [ref](const C& c) { return std::to_string(ref(const_cast<C&>(c))); }};
  };

  static const std::vector<std::pair<std::string, Field>> table = {
      {"data.dir", text([](C& c) -> std::string& { return c.data.dir; })},
      {"data.actions", integer([](C& c) -> int& { return c.data.synthetic.actions; })},
      {"data.frames", integer([](C& c) -> int& { return c.data.synthetic.frames; })},
      {"data.joints", integer([](C& c) -> int& { return c.data.synthetic.joints; })},
      {"data.train_per_action", integer([](C& c) -> int& { return c.data.synthetic.train_per_action; })},
      {"data.eval_per_action", integer([](C& c) -> int& { return c.data.synthetic.eval_per_action; })},
      {"data.seed", seed([](C& c) -> std::uint64_t& { return c.data.synthetic.seed; })},
      {"data.pixel_noise", real([](C& c) -> double& { return c.data.synthetic.pixel_noise; })},
      {"data.hard_actions",
       Field{[](C& c, const std::string& v, const std::string&) { c.data.hard_actions = io::split_list(v); },
             [](const C& c) { return io::join_list(c.data.hard_actions); }}},
      {"data.train_limit", integer([](C& c) -> int& { return c.data.train_limit; })},
      {"data.eval_on_train", flag([](C& c) -> bool& { return c.data.eval_on_train; })},

      {"encoder.channels", integer([](C& c) -> int& { return c.model.encoder.channels; })},
      {"encoder.kernel_width", integer([](C& c) -> int& { return c.model.encoder.kernel_width; })},
      {"encoder.dropout", real([](C& c) -> double& { return c.model.encoder.dropout; })},

      {"atp.branch",
       Field{[](C& c, const std::string& v, const std::string&) { c.model.atp.branch = parse_action_branch(v); },
             [](const C& c) { return std::string(to_string(c.model.atp.branch)); }}},
      {"atp.context_tokens", integer([](C& c) -> int& { return c.model.atp.context_tokens; })},
      {"atp.tau", real([](C& c) -> double& { return c.model.atp.tau; })},
      {"atp.projector",
       Field{[](C& c, const std::string& v, const std::string&) { c.model.atp.projector = parse_projector_kind(v); },
             [](const C& c) { return std::string(to_string(c.model.atp.projector)); }}},
      {"atp.projector_blocks", integer([](C& c) -> int& { return c.model.atp.projector_blocks; })},
      {"atp.tap_layer", integer([](C& c) -> int& { return c.model.atp.tap_layer; })},
      {"atp.pose_to_text", flag([](C& c) -> bool& { return c.model.atp.pose_to_text; })},
      {"atp.text_source",
       Field{[](C& c, const std::string& v, const std::string&) { c.model.atp.text_source = parse_text_source(v); },
             [](const C& c) { return std::string(to_string(c.model.atp.text_source)); }}},
      {"atp.embeddings_path", text([](C& c) -> std::string& { return c.model.atp.embeddings_path; })},
      {"atp.text_layers", integer([](C& c) -> int& { return c.model.atp.text_layers; })},

      {"app.enabled", flag([](C& c) -> bool& { return c.model.app.enabled; })},
      {"app.prompts", integer([](C& c) -> int& { return c.model.app.prompts; })},
      {"app.layers", integer([](C& c) -> int& { return c.model.app.layers; })},
      {"app.ffn_multiplier", integer([](C& c) -> int& { return c.model.app.ffn_multiplier; })},

      {"train.batch_size", integer([](C& c) -> int& { return c.train.batch_size; })},
      {"train.epochs", integer([](C& c) -> int& { return c.train.epochs; })},
      {"train.lr", real([](C& c) -> double& { return c.train.lr; })},
      {"train.lr_decay", real([](C& c) -> double& { return c.train.lr_decay; })},
      {"train.lambda", real([](C& c) -> double& { return c.train.lambda; })},
      {"train.seed", seed([](C& c) -> std::uint64_t& { return c.train.seed; })},
      {"train.max_steps",
       Field{[](C& c, const std::string& v, const std::string& w) { c.train.max_steps = parse_int(v, w); },
             [](const C& c) { return std::to_string(c.train.max_steps); }}},
      {"train.gt_labels_at_eval", flag([](C& c) -> bool& { return c.train.gt_labels_at_eval; })},
  };
  return table;
}

const Field* find_field(const std::string& path) {
  for (const auto& [name, field] : fields()) {
    if (name == path) return &field;
  }
  return nullptr;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin, ExperimentConfig base) {
  for (const auto& kv : io::parse_key_values(text, origin)) {
    const std::string where = origin + ":" + std::to_string(kv.line);
    if (kv.section.empty()) throw ConfigError(where + ": key '" + kv.key + "' outside any section");
    const std::string path = kv.section + "." + kv.key;
    const Field* field = find_field(path);
    if (!field) throw ConfigError(where + ": unknown key '" + path + "'");
    field->set(base, kv.value, where + " " + path);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  return parse_config(io::read_text_file(path), path, std::move(base));
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [name, field] : fields()) {
    const auto dot = name.find('.');
    const std::string s = name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += "\n";
      out += "[" + s + "]\n";
      section = s;
    }
    out += name.substr(dot + 1) + " = " + field.get(config) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& c) {
  if (c.train.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (c.train.epochs < 1) throw ConfigError("epochs must be positive");
  if (!(c.train.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(c.train.lr_decay > 0.0) || c.train.lr_decay > 1.0) throw ConfigError("lr_decay must lie in (0, 1]");
  if (!(c.train.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (c.train.max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (c.data.train_limit < 0) throw ConfigError("train_limit must be non-negative");
  validate(c.model);
}

}  // namespace apm
