#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qnadmm {

// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double x);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
bool parse_bool(std::string_view s);

// Flat `key = value` text with `#` comments. Later keys overwrite earlier ones;
// malformed lines throw InvalidArgument carrying the line number.
std::map<std::string, std::string> parse_key_values(std::string_view text);

}  // namespace qnadmm
