#ifndef SPATIALIV_TABLE_HPP
#define SPATIALIV_TABLE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace spatialiv {

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

using Cell = std::variant<std::string, double, std::int64_t>;

/// Small tidy table with `#`-prefixed metadata, rendered as CSV or JSON.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_row(std::vector<Cell> row);
  std::string to_csv() const;
  std::string to_json() const;
};

/// Fixed 12 significant digits; NaN renders as "NA".
std::string format_number(double v);

}  // namespace spatialiv

#endif
