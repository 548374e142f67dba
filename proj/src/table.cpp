#include "spatialiv/table.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csv_util.hpp"
#include "spatialiv/error.hpp"

namespace spatialiv {

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path + " failed: " + ec.message());
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::DimensionMismatch, "table row has " + std::to_string(row.size()) +
                                                  " cells, expected " +
                                                  std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return detail::quote_if_needed(*s);
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::to_string(std::get<std::int64_t>(c));
}

}  // namespace

std::string Table::to_csv() const {
  std::ostringstream out;
  for (const auto& [key, value] : metadata) out << "# " << key << ": " << value << '\n';
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << cell_text(row[j]);
    out << '\n';
  }
  return out.str();
}

std::string Table::to_json() const {
  nlohmann::ordered_json doc;
  doc["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : metadata) doc["metadata"][key] = value;
  doc["columns"] = columns;
  auto& out_rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              r[columns[j]] = std::isfinite(v) ? nlohmann::ordered_json(std::stod(format_number(v)))
                                               : nlohmann::ordered_json(nullptr);
            } else {
              r[columns[j]] = v;
            }
          },
          row[j]);
    }
    out_rows.push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

}  // namespace spatialiv
