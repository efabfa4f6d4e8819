#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace icsim {

using Cell = std::variant<double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  // Rejects rows of the wrong width and non-finite numbers.
  void add_row(std::vector<Cell> row);
  std::size_t column_index(std::string_view name) const;
  double number(std::size_t row, std::string_view column) const;
};

// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

// Header row, comma separated, '.' decimal; strings quoted only when needed.
std::string to_csv(const ResultTable& table);
// {"metadata": {...}, "rows": [{column: value, ...}, ...]}
std::string to_json(const ResultTable& table);

// Reads back a table written by to_csv (metadata is not part of the CSV).
ResultTable parse_csv(std::string_view text);

}  // namespace icsim
