#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace psps::csv {

/// A parsed CSV table. `line_numbers[i]` is the 1-based source line of row i.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Column index for `name`, or -1.
  [[nodiscard]] int column(std::string_view name) const;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF tolerant. Throws
/// InputError with `source:line` context on ragged rows or open quotes.
Table read(std::istream& in, const std::string& source);
Table read_file(const std::string& path);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Parses a double, throwing InputError naming `what` on failure.
double parse_double(const std::string& text, const std::string& what);

}  // namespace psps::csv

namespace psps {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace psps
