#include "icsim/result_table.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace icsim {

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(columns.size()));
  for (const auto& cell : row)
    if (const auto* v = std::get_if<double>(&cell); v && !std::isfinite(*v))
      throw std::domain_error("ResultTable: non-finite value");
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column_index(std::string_view name) const {
  for (std::size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == name) return k;
  throw std::out_of_range("ResultTable: no column '" + std::string(name) + "'");
}

double ResultTable::number(std::size_t row, std::string_view column) const {
  return std::get<double>(rows.at(row).at(column_index(column)));
}

std::string format_number(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace

std::string to_csv(const ResultTable& table) {
  std::string out;
  for (std::size_t k = 0; k < table.columns.size(); ++k) out += (k ? "," : "") + csv_field(table.columns[k]);
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      if (const auto* v = std::get_if<double>(&row[k]))
        out += format_number(*v);
      else
        out += csv_field(std::get<std::string>(row[k]));
    }
    out += "\r\n";
  }
  return out;
}

std::string to_json(const ResultTable& table) {
  nlohmann::ordered_json doc;
  doc["metadata"] = table.metadata;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k)
      std::visit([&](const auto& v) { obj[table.columns[k]] = v; }, row[k]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

ResultTable parse_csv(std::string_view text) {
  ResultTable table;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (header) {
      table.columns = std::move(fields);
      header = false;
      continue;
    }
    std::vector<Cell> row;
    for (auto& f : fields) {
      double v = 0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec == std::errc() && res.ptr == f.data() + f.size())
        row.emplace_back(v);
      else
        row.emplace_back(std::move(f));
    }
    table.add_row(std::move(row));
  }
  return table;
}

}  // namespace icsim
