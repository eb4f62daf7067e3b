#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trajmode {

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Strict parse of a whole field; nullopt on trailing garbage or overflow.
[[nodiscard]] std::optional<double> parse_double(std::string_view text);
[[nodiscard]] std::optional<long long> parse_int(std::string_view text);

[[nodiscard]] std::vector<std::string_view> split(std::string_view line, char sep);
[[nodiscard]] std::string_view trim(std::string_view text);

/// Minimal comma-separated table. Fields never contain commas or quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or nullopt.
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

/// Reads a header line plus data rows. Throws DataError on ragged rows.
[[nodiscard]] CsvTable read_csv(std::istream& in);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace trajmode
