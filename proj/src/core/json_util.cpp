#include "core/json_util.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace forceinfer::json_util {

json parse(std::string_view text, const std::string& module) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(module, std::string("malformed JSON: ") + e.what());
  }
}

void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                 const std::string& module, const std::string& context) {
  if (!obj.is_object()) throw ParseError(module, context + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ParseError(module, context + ": unknown key \"" + key + "\"");
  }
}

const json& require(const json& obj, std::string_view key, const std::string& module,
                    const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(module, context + ": missing key \"" + std::string(key) + "\"");
  }
  return *it;
}

double number(const json& value, const std::string& module, const std::string& context) {
  if (!value.is_number()) throw ParseError(module, context + ": expected a number");
  return value.get<double>();
}

std::string string(const json& value, const std::string& module, const std::string& context) {
  if (!value.is_string()) throw ParseError(module, context + ": expected a string");
  return value.get<std::string>();
}

std::string read_file(const std::string& path, const std::string& module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(module, "cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content, const std::string& module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(module, "cannot write \"" + path + "\"");
  out << content;
  if (!out) throw IoError(module, "write failed for \"" + path + "\"");
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s, const std::string& module) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError(module, "bad exact double \"" + s + "\"");
  return v;
}

}  // namespace forceinfer::json_util
