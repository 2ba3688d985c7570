#pragma once

// Subset of TOML mapped onto JSON: [tables], [[arrays of tables]], bare or quoted
// keys, strings, integers, floats (incl. inf/nan), booleans and (nested,
// multi-line) arrays. Inline tables and dates are not supported.

#include <json.hpp>

#include <string>
#include <string_view>

namespace imprs {

using ordered_json = nlohmann::ordered_json;

/// Throws ConfigError with the line number on malformed input.
ordered_json parse_toml(std::string_view text);

/// Writes an object as TOML. Key order is preserved; scalar and plain-array keys
/// of a table come before its sub-tables. Floats always carry a '.', 'e', inf or nan.
std::string write_toml(const ordered_json& root);

}  // namespace imprs
