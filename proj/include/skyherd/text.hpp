#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace skyherd {

// Shortest round-trip decimal form, always carrying a decimal point or an
// exponent ("6378137.0", "0.25", "1e-10").
std::string format_real(double value);

std::string_view trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char separator);

// Reads `key = value` lines. Blank lines and lines starting with '#' are
// skipped. Throws ConfigError on malformed lines or repeated keys.
std::map<std::string, std::string> parse_key_values(std::istream& in);

double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);
std::uint64_t parse_unsigned(std::string_view text, std::string_view what);

}  // namespace skyherd
