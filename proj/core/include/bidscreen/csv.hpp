#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bidscreen::csv {

using Row = std::vector<std::string>;

/// Streaming RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
class Reader {
public:
  Reader(std::istream& in, char delimiter = ',');

  /// Next record, or nullopt at end of input. Blank lines are skipped.
  std::optional<Row> next();

  /// 1-based physical line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const Row& row, char delimiter = ',');

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

}  // namespace bidscreen::csv
