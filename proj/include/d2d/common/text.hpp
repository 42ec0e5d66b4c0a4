#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace d2d::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);

bool is_valid_utf8(std::string_view s);
std::size_t utf8_length(std::string_view s);

// First `max_code_points` code points of `s`; never splits a multi-byte sequence.
std::string utf8_prefix(std::string_view s, std::size_t max_code_points);

// Keeps at most `max_code_points` code points and appends `marker` when cut.
std::string truncate_with_marker(std::string_view s, std::size_t max_code_points, std::string_view marker);

std::string html_escape(std::string_view s);

// Shortest decimal representation that round-trips; used wherever numbers are
// embedded in prompts or text so output is byte-stable.
std::string format_number(double v);

// Fixed-point with `digits` decimals.
std::string format_fixed(double v, int digits);

} // namespace d2d::text
