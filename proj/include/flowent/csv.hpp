#pragma once

// Small CSV helpers shared by the record readers and writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flowent::csv {

// RFC 4180 field splitting: double quotes delimit fields, "" is a literal quote.
std::vector<std::string> split_line(std::string_view line);

// Quote a field only if it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

// Shortest fixed-point rendering with at least `min_decimals` digits after the
// point that parses back to the identical double.
std::string format_real(double v, int min_decimals = 6);

std::string format_fixed(double v, int decimals);

// Strict parsers: the whole field must be consumed. Throw std::invalid_argument.
double parse_real(std::string_view field);
std::uint64_t parse_uint(std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace flowent::csv
