#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recomb::csv {

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Quotes a field when it holds a comma, quote or line break.
std::string quote(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);
std::vector<std::string> split_line(std::string_view line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws when absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a header line plus rows; every row must match the header width.
Table read(std::istream& in);

}  // namespace recomb::csv
