#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowgraph {

/// Reads one RFC-4180 record (quoted fields may span lines). Returns false
/// at end of input. `line_number` is advanced by the physical lines consumed.
bool read_delimited_record(std::istream& in, char delimiter, std::vector<std::string>& fields,
                           std::size_t& line_number);

/// Quotes a field when it contains the delimiter, a quote or a line break.
std::string quote_field(std::string_view field, char delimiter);

std::string_view trim(std::string_view text);

/// Parses a numeric cell. Accepts decimal, exponent, inf/infinity/nan (any
/// case) and 0x-prefixed hexadecimal integers. Returns nullopt for empty or
/// non-numeric cells.
std::optional<double> parse_number(std::string_view cell);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace flowgraph
