#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace uescore::cli {

/// Minimal TOML reader covering the flat experiment-config subset this
/// project emits: [section] headers, bare keys, strings with basic escapes,
/// integers, floats, booleans, and arrays of strings. Anything else is a
/// UsageError naming the line.
struct TomlValue {
  enum class Kind { kString, kInteger, kFloat, kBoolean, kStringArray };
  Kind kind = Kind::kString;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<std::string> array;

  double as_number() const;  // integer or float
};

using TomlSection = std::map<std::string, TomlValue>;
using TomlDocument = std::map<std::string, TomlSection>;

TomlDocument parse_toml(std::istream& in, const std::string& origin);
TomlDocument parse_toml_file(const std::filesystem::path& path);

std::string toml_escape(const std::string& value);  // quoted string literal

}  // namespace uescore::cli
