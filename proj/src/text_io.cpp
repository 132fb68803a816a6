#include "flowgraph/text_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>

namespace flowgraph {

bool read_delimited_record(std::istream& in, char delimiter, std::vector<std::string>& fields,
                           std::size_t& line_number) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_number;

  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (in_quotes) {
        if (ch == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(ch);
        }
      } else if (ch == '"' && !field_was_quoted && trim(field).empty()) {
        field.clear();
        in_quotes = true;
        field_was_quoted = true;
      } else if (ch == delimiter) {
        fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
      } else if (ch == '\r' && i + 1 == line.size()) {
        // CRLF line ending
      } else {
        field.push_back(ch);
      }
    }
    if (!in_quotes) break;
    // Quoted field continues on the next physical line.
    if (!std::getline(in, line)) break;
    ++line_number;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return true;
}

std::string quote_field(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;

  bool negative = false;
  std::string_view body = cell;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    std::uint64_t value = 0;
    const auto* first = body.data() + 2;
    const auto* last = body.data() + body.size();
    auto [ptr, ec] = std::from_chars(first, last, value, 16);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    const double magnitude = static_cast<double>(value);
    return negative ? -magnitude : magnitude;
  }

  double value = 0.0;
  const auto* last = body.data() + body.size();
  auto [ptr, ec] = std::from_chars(body.data(), last, value);
  if (ptr != last) return std::nullopt;
  if (ec == std::errc::result_out_of_range) {
    // Magnitude overflow reads as infinity, underflow as zero.
    value = (body.find_first_of("eE") != std::string_view::npos &&
             body.find("e-") == std::string_view::npos && body.find("E-") == std::string_view::npos)
                ? HUGE_VAL
                : 0.0;
  } else if (ec != std::errc{}) {
    return std::nullopt;
  }
  return negative ? -value : value;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buffer{};
  auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

}  // namespace flowgraph
