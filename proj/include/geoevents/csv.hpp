#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace geoevents::csv {

/// Splits one CSV record. Handles RFC 4180 double-quoted fields; throws
/// ParseError on an unterminated quote.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only if it contains a comma, quote or line break.
std::string escape_field(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace geoevents::csv
