#include "apm/data/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "apm/core/errors.hpp"

namespace apm::io {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::string join_list(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    KeyValue kv{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path);
  out << text;
  if (!out) throw Error("io", "short write to " + path);
}

long long parse_int(const std::string& value, const std::string& what) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(what + ": not an integer: '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& value, const std::string& what) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(what + ": not an unsigned integer: '" + value + "'");
  }
  return v;
}

double parse_double(const std::string& value, const std::string& what) {
  double v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(what + ": not a number: '" + value + "'");
  return v;
}

bool parse_bool(const std::string& value, const std::string& what) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(what + ": not a boolean: '" + value + "'");
}

}  // namespace apm::io
