#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlmbench::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

// Position of the last case-insensitive occurrence of needle, or npos.
std::size_t ifind_last(std::string_view haystack, std::string_view needle);

// Splits on '\n'; a trailing '\r' on each line is dropped.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal form that round-trips ("3", "3.5", "0.125").
std::string format_number(double v);
// Fixed-point with the given number of decimals ("0.67", "16.8").
std::string format_fixed(double v, int decimals);

// Whole-string numeric conversions; nullopt on any trailing garbage.
std::optional<long long> to_integer(std::string_view s);
std::optional<double> to_real(std::string_view s);

}  // namespace vlmbench::text
