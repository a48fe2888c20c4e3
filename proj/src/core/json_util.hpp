#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

namespace forceinfer::json_util {

using nlohmann::json;

// Parses `text`, rethrowing nlohmann errors as ParseError tagged with `module`.
json parse(std::string_view text, const std::string& module);

// Rejects any key of `obj` not listed in `allowed` (strict schemas catch typos).
void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                 const std::string& module, const std::string& context);

const json& require(const json& obj, std::string_view key, const std::string& module,
                    const std::string& context);

double number(const json& value, const std::string& module, const std::string& context);
std::string string(const json& value, const std::string& module, const std::string& context);

std::string read_file(const std::string& path, const std::string& module);
void write_file(const std::string& path, const std::string& content, const std::string& module);

// Exact text form of a double ("%a"), used by bit-stable fixtures.
std::string hex_double(double v);
double parse_hex_double(const std::string& s, const std::string& module);

}  // namespace forceinfer::json_util
