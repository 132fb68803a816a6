#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flowgraph/text_io.hpp"

using namespace flowgraph;

TEST_CASE("delimited records handle quotes, embedded newlines and CRLF") {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",x,\n");
  std::vector<std::string> fields;
  std::size_t line = 0;
  REQUIRE(read_delimited_record(in, ',', fields, line));
  CHECK(fields == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  REQUIRE(read_delimited_record(in, ',', fields, line));
  CHECK(fields == std::vector<std::string>{"multi\nline", "x", ""});
  CHECK_FALSE(read_delimited_record(in, ',', fields, line));
}

TEST_CASE("quote_field round-trips through the reader") {
  for (std::string text : {"plain", "with,comma", "with \"quote\"", "line\nbreak", ""}) {
    std::istringstream in(quote_field(text, ',') + ",tail\n");
    std::vector<std::string> fields;
    std::size_t line = 0;
    REQUIRE(read_delimited_record(in, ',', fields, line));
    REQUIRE(fields.size() == 2);
    CHECK(fields[0] == text);
  }
}

TEST_CASE("parse_number accepts decimal, hex and special values") {
  CHECK(parse_number("42").value() == 42.0);
  CHECK(parse_number(" -1.5e3 ").value() == -1500.0);
  CHECK(parse_number("+7").value() == 7.0);
  CHECK(parse_number("0x1F").value() == 31.0);
  CHECK(std::isinf(*parse_number("Infinity")));
  CHECK(std::isnan(*parse_number("NaN")));
  CHECK_FALSE(parse_number("tcp").has_value());
  CHECK_FALSE(parse_number("").has_value());
  CHECK_FALSE(parse_number("-").has_value());
}

TEST_CASE("format_double is the shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, -2.5, 0.0}) {
    CHECK(parse_number(format_double(v)).value() == v);
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("fnv1a_hex is stable") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("abc") != fnv1a_hex("acb"));
}
