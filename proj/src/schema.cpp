#include "kipps/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

std::int32_t ColumnSpec::category_index(const std::string& label) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == label) return static_cast<std::int32_t>(i);
  return -1;
}

const ColumnSpec* TableSchema::find(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

std::size_t TableSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  fail_data("schema has no column named '" + name + "'");
}

void TableSchema::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) fail_data("schema: empty column name");
    if (!names.insert(c.name).second) fail_data("schema: duplicate column name '" + c.name + "'");
    if (c.kind == ColumnKind::continuous) {
      if (!c.categories.empty())
        fail_data("schema: continuous column '" + c.name + "' carries categories");
      if (c.masked_by) fail_data("schema: continuous column '" + c.name + "' carries masked_by");
    } else if (c.categories_closed) {
      if (c.categories.empty())
        fail_data("schema: column '" + c.name + "' declares an empty category list");
      std::unordered_set<std::string> cats(c.categories.begin(), c.categories.end());
      if (cats.size() != c.categories.size())
        fail_data("schema: column '" + c.name + "' has duplicate categories");
    }
  }
  if (target_column && !names.count(*target_column))
    fail_data("schema: target_column '" + *target_column + "' is not a column");
  for (const auto& s : sensitive_columns)
    if (!names.count(s)) fail_data("schema: sensitive column '" + s + "' is not a column");
}

const std::string& DataTable::label(std::size_t col, const Row& row) const {
  const auto& spec = schema.columns.at(col);
  return spec.categories.at(static_cast<std::size_t>(row.at(col).cat));
}

void DataTable::check_invariants() const {
  schema.validate();
  for (const auto& row : rows) {
    if (row.size() != schema.column_count()) fail_data("row arity does not match schema");
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& spec = schema.columns[c];
      if (spec.kind == ColumnKind::continuous) {
        if (!std::isfinite(row[c].num))
          fail_data("non-finite continuous value in column '" + spec.name + "'");
      } else {
        if (row[c].cat < 0 || static_cast<std::size_t>(row[c].cat) >= spec.categories.size())
          fail_data("category index out of range in column '" + spec.name + "'");
      }
    }
  }
}

namespace {

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void DataTable::append_text_row(const std::vector<std::string>& cells) {
  if (cells.size() != schema.column_count()) fail_data("row arity does not match schema");
  Row row(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& spec = schema.columns[c];
    if (spec.kind == ColumnKind::continuous) {
      double v = 0.0;
      if (!parse_double(cells[c], v))
        fail_data("unparsable continuous cell '" + cells[c] + "' in column '" + spec.name + "'");
      row[c] = Cell::continuous(v);
    } else {
      std::int32_t idx = spec.category_index(cells[c]);
      if (idx < 0) {
        if (spec.categories_closed)
          fail_data("unknown category '" + cells[c] + "' in column '" + spec.name + "'");
        idx = static_cast<std::int32_t>(spec.categories.size());
        spec.categories.push_back(cells[c]);
      }
      row[c] = Cell::discrete(idx);
    }
  }
  rows.push_back(std::move(row));
}

DataTable load_csv(const std::string& path, TableSchema schema, MissingPolicy policy) {
  schema.validate();
  std::ifstream in(path);
  if (!in) fail_data("cannot open data file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) fail_data("empty data file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);

  std::set<std::string> header_set(header.begin(), header.end());
  std::set<std::string> schema_set;
  for (const auto& c : schema.columns) schema_set.insert(c.name);
  if (header_set != schema_set) fail_data("header does not match schema columns in '" + path + "'");
  if (header.size() != schema.column_count()) fail_data("duplicate header column in '" + path + "'");

  // map csv position -> schema position
  std::vector<std::size_t> order(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) order[i] = schema.index_of(header[i]);

  DataTable table;
  table.schema = std::move(schema);
  std::size_t lineno = 1;
  std::vector<std::string> reordered(table.schema.column_count());
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      fail_data("row " + std::to_string(lineno) + " has wrong arity in '" + path + "'");
    bool missing = false;
    for (const auto& c : cells)
      if (c.empty()) missing = true;
    if (missing) {
      if (policy == MissingPolicy::error)
        fail_data("missing value at row " + std::to_string(lineno) + " in '" + path + "'");
      continue;  // drop_row
    }
    for (std::size_t i = 0; i < cells.size(); ++i) reordered[order[i]] = std::move(cells[i]);
    table.append_text_row(reordered);
  }
  if (table.rows.empty()) fail_data("no data rows in '" + path + "'");
  table.check_invariants();
  return table;
}

void write_csv(const DataTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write data file '" + path + "'");
  for (std::size_t c = 0; c < table.schema.column_count(); ++c) {
    if (c) out << ',';
    out << table.schema.columns[c].name;
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      const auto& spec = table.schema.columns[c];
      if (spec.kind == ColumnKind::continuous)
        out << format_double(row[c].num);
      else
        out << spec.categories[static_cast<std::size_t>(row[c].cat)];
    }
    out << '\n';
  }
}

std::pair<DataTable, DataTable> split_train_holdout(const DataTable& table,
                                                    double holdout_fraction, std::uint64_t seed) {
  const std::size_t n = table.row_count();
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    fail_data("holdout fraction must lie in (0,1)");
  if (n < 2) fail_data("table too small to split");
  const auto h = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  if (h == 0 || h == n) fail_data("table too small for the requested holdout fraction");

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng = Rng::substream(seed, "split_train_holdout");
  rng.shuffle(idx);

  DataTable train, holdout;
  train.schema = table.schema;
  holdout.schema = table.schema;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < h)
      holdout.rows.push_back(table.rows[idx[i]]);
    else
      train.rows.push_back(table.rows[idx[i]]);
  }
  return {std::move(train), std::move(holdout)};
}

namespace {

TableSchema schema_from_json(const nlohmann::json& j) {
  TableSchema s;
  if (!j.contains("columns") || !j["columns"].is_array())
    fail_data("schema file: missing 'columns' array");
  for (const auto& jc : j["columns"]) {
    ColumnSpec c;
    c.name = jc.at("name").get<std::string>();
    const std::string kind = jc.at("kind").get<std::string>();
    if (kind == "continuous")
      c.kind = ColumnKind::continuous;
    else if (kind == "discrete")
      c.kind = ColumnKind::discrete;
    else
      fail_data("schema file: unknown kind '" + kind + "' for column '" + c.name + "'");
    if (jc.contains("categories")) {
      c.categories = jc["categories"].get<std::vector<std::string>>();
      c.categories_closed = true;
    }
    if (jc.contains("masked_by")) c.masked_by = jc["masked_by"].get<std::string>();
    s.columns.push_back(std::move(c));
  }
  if (j.contains("target_column")) s.target_column = j["target_column"].get<std::string>();
  if (j.contains("sensitive_columns"))
    s.sensitive_columns = j["sensitive_columns"].get<std::vector<std::string>>();
  s.validate();
  return s;
}

nlohmann::json schema_to_json(const TableSchema& s) {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : s.columns) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["kind"] = c.kind == ColumnKind::continuous ? "continuous" : "discrete";
    if (c.categories_closed) jc["categories"] = c.categories;
    if (c.masked_by) jc["masked_by"] = *c.masked_by;
    j["columns"].push_back(std::move(jc));
  }
  if (s.target_column) j["target_column"] = *s.target_column;
  if (!s.sensitive_columns.empty()) j["sensitive_columns"] = s.sensitive_columns;
  return j;
}

}  // namespace

TableSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail_data("schema file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return schema_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail_data("schema file '" + path + "': " + e.what());
  }
}

void save_schema(const TableSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write schema file '" + path + "'");
  out << schema_to_json(schema).dump(2) << '\n';
}

std::string schema_to_json_string(const TableSchema& schema) {
  return schema_to_json(schema).dump();
}

TableSchema schema_from_json_string(const std::string& text) {
  try {
    return schema_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    fail_data(std::string("schema JSON: ") + e.what());
  }
}

}  // namespace kipps
