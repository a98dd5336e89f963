#include "uescore/toml.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "uescore/errors.hpp"

namespace uescore::cli {
namespace {

struct Cursor {
  const std::string& line;
  std::size_t pos = 0;
  std::string where;

  [[noreturn]] void fail(const std::string& message) const {
    throw UsageError(where + ": " + message);
  }
  bool done() const { return pos >= line.size(); }
  char peek() const { return line[pos]; }
  void skip_space() {
    while (!done() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_string_literal(Cursor& cursor) {
  ++cursor.pos;  // opening quote
  std::string out;
  while (true) {
    if (cursor.done()) cursor.fail("unterminated string");
    const char c = cursor.line[cursor.pos++];
    if (c == '"') return out;
    if (c != '\\') {
      out += c;
      continue;
    }
    if (cursor.done()) cursor.fail("dangling escape");
    const char esc = cursor.line[cursor.pos++];
    switch (esc) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default: cursor.fail(std::string("unsupported escape \\") + esc);
    }
  }
}

TomlValue parse_scalar(Cursor& cursor) {
  cursor.skip_space();
  if (cursor.done()) cursor.fail("missing value");
  TomlValue value;

  if (cursor.peek() == '"') {
    value.kind = TomlValue::Kind::kString;
    value.str = parse_string_literal(cursor);
    return value;
  }

  std::size_t end = cursor.pos;
  while (end < cursor.line.size() && cursor.line[end] != ' ' &&
         cursor.line[end] != '\t' && cursor.line[end] != '#' &&
         cursor.line[end] != ',' && cursor.line[end] != ']') {
    ++end;
  }
  const std::string token = cursor.line.substr(cursor.pos, end - cursor.pos);
  cursor.pos = end;
  if (token.empty()) cursor.fail("missing value");

  if (token == "true" || token == "false") {
    value.kind = TomlValue::Kind::kBoolean;
    value.boolean = token == "true";
    return value;
  }
  const bool looks_float = token.find_first_of(".eE") != std::string::npos;
  if (!looks_float) {
    std::int64_t integer = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), integer);
    if (ec == std::errc() && ptr == token.data() + token.size()) {
      value.kind = TomlValue::Kind::kInteger;
      value.integer = integer;
      return value;
    }
  }
  char* parse_end = nullptr;
  const double real = std::strtod(token.c_str(), &parse_end);
  if (parse_end == token.c_str() + token.size()) {
    value.kind = TomlValue::Kind::kFloat;
    value.real = real;
    return value;
  }
  cursor.fail("cannot parse value '" + token + "'");
}

TomlValue parse_value(Cursor& cursor) {
  cursor.skip_space();
  if (cursor.done()) cursor.fail("missing value");
  if (cursor.peek() != '[') return parse_scalar(cursor);

  ++cursor.pos;  // '['
  TomlValue value;
  value.kind = TomlValue::Kind::kStringArray;
  cursor.skip_space();
  if (!cursor.done() && cursor.peek() == ']') {
    ++cursor.pos;
    return value;
  }
  while (true) {
    cursor.skip_space();
    if (cursor.done() || cursor.peek() != '"') {
      cursor.fail("arrays may contain only strings");
    }
    value.array.push_back(parse_string_literal(cursor));
    cursor.skip_space();
    if (cursor.done()) cursor.fail("unterminated array");
    const char c = cursor.line[cursor.pos++];
    if (c == ']') return value;
    if (c != ',') cursor.fail("expected ',' or ']' in array");
  }
}

}  // namespace

double TomlValue::as_number() const {
  if (kind == Kind::kInteger) return static_cast<double>(integer);
  if (kind == Kind::kFloat) return real;
  throw UsageError("expected a numeric value");
}

TomlDocument parse_toml(std::istream& in, const std::string& origin) {
  TomlDocument document;
  std::string section;
  std::string line;
  std::size_t line_number = 0;

  while (std::getline(in, line)) {
    ++line_number;
    Cursor cursor{line, 0, origin + ":" + std::to_string(line_number)};
    cursor.skip_space();
    if (cursor.done() || cursor.peek() == '#') continue;

    if (cursor.peek() == '[') {
      const auto close = line.find(']', cursor.pos);
      if (close == std::string::npos) cursor.fail("unterminated section header");
      section = line.substr(cursor.pos + 1, close - cursor.pos - 1);
      if (section.empty()) cursor.fail("empty section name");
      cursor.pos = close + 1;
      cursor.skip_space();
      if (!cursor.done() && cursor.peek() != '#') cursor.fail("junk after section header");
      document[section];
      continue;
    }

    std::string key;
    while (!cursor.done() && is_bare_key_char(cursor.peek())) {
      key += cursor.line[cursor.pos++];
    }
    if (key.empty()) cursor.fail("expected a key");
    cursor.skip_space();
    if (cursor.done() || cursor.peek() != '=') cursor.fail("expected '=' after key");
    ++cursor.pos;

    document[section][key] = parse_value(cursor);
    cursor.skip_space();
    if (!cursor.done() && cursor.peek() != '#') cursor.fail("junk after value");
  }
  return document;
}

TomlDocument parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  return parse_toml(in, path.string());
}

std::string toml_escape(const std::string& value) {
  std::string out = "\"";
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace uescore::cli
