#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace apm::io {

/// One `key = value` line; `section` is the most recent `[name]` header.
struct KeyValue {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses UTF-8 `key = value` text. Blank lines and lines starting with '#'
/// or ';' are ignored. Malformed lines raise a ConfigError naming the line.
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char sep = ',');
std::string join_list(const std::vector<std::string>& items, char sep = ',');

long long parse_int(const std::string& value, const std::string& what);
std::uint64_t parse_u64(const std::string& value, const std::string& what);
double parse_double(const std::string& value, const std::string& what);
bool parse_bool(const std::string& value, const std::string& what);

}  // namespace apm::io
