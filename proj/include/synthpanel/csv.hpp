#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthpanel::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column position by name; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

/// RFC 4180 parsing: quoted fields may hold commas, doubled quotes and line
/// breaks. CRLF and LF endings are accepted. When `skip_comments` is set,
/// records whose first character is '#' are ignored.
Table parse(std::string_view text, bool skip_comments = false);
Table read_file(const std::filesystem::path& path, bool skip_comments = false);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
std::string join_row(std::span<const std::string> fields);

/// Shortest round-trip decimal form, locale independent.
std::string format_number(double v);

}  // namespace synthpanel::csv
