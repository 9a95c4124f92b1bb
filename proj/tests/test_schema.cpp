#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "kipps/error.hpp"
#include "kipps/schema.hpp"

using namespace kipps;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/kipps_schema_test_") + name;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TableSchema color_x_schema(bool closed_colors) {
  TableSchema s;
  ColumnSpec color;
  color.name = "color";
  color.kind = ColumnKind::discrete;
  if (closed_colors) {
    color.categories = {"red", "blue"};
    color.categories_closed = true;
  }
  ColumnSpec x;
  x.name = "x";
  x.kind = ColumnKind::continuous;
  s.columns = {color, x};
  return s;
}

}  // namespace

TEST_CASE("load_csv identity load infers categories") {
  const auto path = temp_path("basic.csv");
  write_file(path, "color,x\nred,1.5\nblue,2\nred,-0.25\n");
  DataTable t = load_csv(path, color_x_schema(false));
  CHECK(t.row_count() == 3);
  REQUIRE(t.schema.columns[0].categories.size() == 2);
  CHECK(t.schema.columns[0].categories[0] == "red");
  CHECK(t.schema.columns[0].categories[1] == "blue");
  CHECK(t.rows[0][1].num == doctest::Approx(1.5));
  CHECK(t.rows[2][1].num == doctest::Approx(-0.25));
}

TEST_CASE("load_csv reorders columns to schema order") {
  const auto path = temp_path("reorder.csv");
  write_file(path, "x,color\n1.5,red\n2,blue\n");
  DataTable t = load_csv(path, color_x_schema(false));
  CHECK(t.schema.columns[0].name == "color");
  CHECK(t.label(0, t.rows[0]) == "red");
  CHECK(t.rows[0][1].num == doctest::Approx(1.5));
}

TEST_CASE("missing policy drop_row drops, error throws") {
  const auto path = temp_path("missing.csv");
  write_file(path, "color,x\nred,1.5\nblue,\nred,3\n");
  DataTable t = load_csv(path, color_x_schema(false), MissingPolicy::drop_row);
  CHECK(t.row_count() == 2);
  CHECK_THROWS_AS(load_csv(path, color_x_schema(false), MissingPolicy::error), Error);
}

TEST_CASE("unknown category under closed schema is an error") {
  const auto path = temp_path("unknown.csv");
  write_file(path, "color,x\ngreen,1\n");
  CHECK_THROWS_WITH_AS(load_csv(path, color_x_schema(true)),
                       doctest::Contains("unknown category"), Error);
}

TEST_CASE("load errors: missing file, header mismatch, bad cell, empty") {
  CHECK_THROWS_AS(load_csv(temp_path("nope.csv"), color_x_schema(false)), Error);

  const auto bad_header = temp_path("badheader.csv");
  write_file(bad_header, "color,y\nred,1\n");
  CHECK_THROWS_AS(load_csv(bad_header, color_x_schema(false)), Error);

  const auto bad_cell = temp_path("badcell.csv");
  write_file(bad_cell, "color,x\nred,abc\n");
  CHECK_THROWS_AS(load_csv(bad_cell, color_x_schema(false)), Error);

  const auto nan_cell = temp_path("nancell.csv");
  write_file(nan_cell, "color,x\nred,nan\n");
  CHECK_THROWS_AS(load_csv(nan_cell, color_x_schema(false)), Error);

  const auto empty = temp_path("empty.csv");
  write_file(empty, "color,x\n");
  CHECK_THROWS_AS(load_csv(empty, color_x_schema(false)), Error);
}

TEST_CASE("csv round trip preserves rows and category order") {
  const auto path = temp_path("round.csv");
  write_file(path, "color,x\nblue,0.125\nred,3.25\nblue,-17\n");
  DataTable t = load_csv(path, color_x_schema(false));

  const auto out = temp_path("round_out.csv");
  write_csv(t, out);
  DataTable t2 = load_csv(out, color_x_schema(false));
  REQUIRE(t2.row_count() == t.row_count());
  CHECK(t2.schema.columns[0].categories == t.schema.columns[0].categories);
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    CHECK(t2.rows[r][0].cat == t.rows[r][0].cat);
    CHECK(t2.rows[r][1].num == t.rows[r][1].num);  // exact round trip
  }
}

TEST_CASE("schema json round trip") {
  TableSchema s = color_x_schema(true);
  s.target_column = "color";
  s.sensitive_columns = {"color"};
  const auto path = temp_path("schema.json");
  save_schema(s, path);
  TableSchema s2 = load_schema(path);
  CHECK(s2.columns.size() == 2);
  CHECK(s2.columns[0].categories_closed);
  CHECK(s2.columns[0].categories == std::vector<std::string>{"red", "blue"});
  CHECK(*s2.target_column == "color");
}

TEST_CASE("schema invariants rejected") {
  TableSchema s = color_x_schema(false);
  s.columns[1].categories = {"oops"};
  CHECK_THROWS_AS(s.validate(), Error);

  TableSchema dup = color_x_schema(false);
  dup.columns[1].name = "color";
  CHECK_THROWS_AS(dup.validate(), Error);

  TableSchema bad_target = color_x_schema(false);
  bad_target.target_column = "missing";
  CHECK_THROWS_AS(bad_target.validate(), Error);
}

namespace {

DataTable numbered_table(std::size_t n) {
  const auto path = temp_path("split.csv");
  std::ofstream out(path);
  out << "color,x\n";
  for (std::size_t i = 0; i < n; ++i) out << (i % 2 ? "red" : "blue") << "," << i << "\n";
  out.close();
  return load_csv(path, color_x_schema(false));
}

}  // namespace

TEST_CASE("split sizes follow round(fraction * n)") {
  DataTable t = numbered_table(10);
  auto [train, holdout] = split_train_holdout(t, 0.3, 7);
  CHECK(train.row_count() == 7);
  CHECK(holdout.row_count() == 3);
}

TEST_CASE("split is deterministic per seed and varies across seeds") {
  DataTable t = numbered_table(50);
  auto [a_train, a_hold] = split_train_holdout(t, 0.3, 7);
  auto [b_train, b_hold] = split_train_holdout(t, 0.3, 7);
  REQUIRE(a_hold.row_count() == b_hold.row_count());
  for (std::size_t r = 0; r < a_hold.row_count(); ++r)
    CHECK(a_hold.rows[r][1].num == b_hold.rows[r][1].num);

  auto [c_train, c_hold] = split_train_holdout(t, 0.3, 8);
  CHECK(c_hold.row_count() == a_hold.row_count());
  bool any_diff = false;
  std::set<double> a_ids, c_ids;
  for (const auto& row : a_hold.rows) a_ids.insert(row[1].num);
  for (const auto& row : c_hold.rows) c_ids.insert(row[1].num);
  any_diff = a_ids != c_ids;
  CHECK(any_diff);
}

TEST_CASE("split partitions the multiset") {
  DataTable t = numbered_table(4);
  auto [train, holdout] = split_train_holdout(t, 0.5, 3);
  CHECK(train.row_count() == 2);
  CHECK(holdout.row_count() == 2);
  std::multiset<double> got;
  for (const auto& row : train.rows) got.insert(row[1].num);
  for (const auto& row : holdout.rows) got.insert(row[1].num);
  std::multiset<double> want{0, 1, 2, 3};
  CHECK(got == want);
}

TEST_CASE("split rejects bad fractions and tiny tables") {
  DataTable t = numbered_table(10);
  CHECK_THROWS_AS(split_train_holdout(t, 0.0, 1), Error);
  CHECK_THROWS_AS(split_train_holdout(t, 1.0, 1), Error);
  DataTable one = numbered_table(1);
  CHECK_THROWS_AS(split_train_holdout(one, 0.5, 1), Error);
}
