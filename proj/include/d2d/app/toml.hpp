#pragma once

#include "json.hpp"

#include <string_view>

namespace d2d::app {

// Reads the TOML subset used by run configs: comments, [table] and
// [dotted.table] headers, bare or quoted keys, basic and literal strings,
// integers, floats, booleans and single-line arrays of those. Anything else
// raises ConfigError with the offending line number.
nlohmann::json parse_toml(std::string_view text);

} // namespace d2d::app
