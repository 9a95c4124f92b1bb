#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kipps {

enum class ColumnKind { continuous, discrete };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::discrete;
  // Discrete only. When `categories_closed` the list was declared in the
  // schema file and unknown labels are load errors; otherwise the list is
  // inferred at first load (first-appearance order) and frozen.
  std::vector<std::string> categories;
  bool categories_closed = false;
  std::optional<std::string> masked_by;  // PropertyMap name

  std::int32_t category_index(const std::string& label) const;  // -1 if absent
};

struct TableSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> target_column;
  std::vector<std::string> sensitive_columns;

  std::size_t column_count() const { return columns.size(); }
  const ColumnSpec* find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws Errc::data
  void validate() const;                                // throws Errc::data
};

// One cell; continuous columns use `num`, discrete columns use `cat`
// (index into the column's category list).
struct Cell {
  double num = 0.0;
  std::int32_t cat = -1;

  static Cell continuous(double v) { return Cell{v, -1}; }
  static Cell discrete(std::int32_t c) { return Cell{0.0, c}; }
};
using Row = std::vector<Cell>;

struct DataTable {
  TableSchema schema;
  std::vector<Row> rows;

  std::size_t row_count() const { return rows.size(); }
  const std::string& label(std::size_t col, const Row& row) const;
  void check_invariants() const;  // throws Errc::data

  // Appends a row given as text cells in schema order; open discrete
  // columns grow their category list.
  void append_text_row(const std::vector<std::string>& cells);
};

enum class MissingPolicy { drop_row, error };

DataTable load_csv(const std::string& path, TableSchema schema,
                   MissingPolicy policy = MissingPolicy::drop_row);
void write_csv(const DataTable& table, const std::string& path);

// Disjoint (train, holdout) partition; holdout size = round(fraction * n),
// membership deterministic in the seed.
std::pair<DataTable, DataTable> split_train_holdout(const DataTable& table,
                                                    double holdout_fraction,
                                                    std::uint64_t seed);

TableSchema load_schema(const std::string& path);
void save_schema(const TableSchema& schema, const std::string& path);
std::string schema_to_json_string(const TableSchema& schema);
TableSchema schema_from_json_string(const std::string& text);

}  // namespace kipps
