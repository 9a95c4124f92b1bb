#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>

#include "kipps/error.hpp"
#include "kipps/rules.hpp"

using namespace kipps;

namespace {

// Small network-style table: protocol / dst_port / bytes.
TableSchema net_schema() {
  TableSchema s;
  ColumnSpec protocol{"protocol", ColumnKind::discrete, {"DNS", "NTP", "HTTP"}, true, {}};
  ColumnSpec port{"dst_port", ColumnKind::discrete, {"53", "123", "80", "60000"}, true, {}};
  port.masked_by = "port_group";
  ColumnSpec bytes{"bytes", ColumnKind::continuous, {}, false, {}};
  s.columns = {protocol, port, bytes};
  return s;
}

RuleSet net_rules() {
  RuleSet rs;
  PropertyMap pm;
  pm.name = "port_group";
  pm.source_column = "dst_port";
  GroupDef well_known{"well_known", GroupMembership::interval, {}, 0, 1023, ""};
  GroupDef registered{"registered", GroupMembership::interval, {}, 1024, 49151, ""};
  GroupDef dynamic{"dynamic", GroupMembership::interval, {}, 49152, 65535, ""};
  pm.groups = {well_known, registered, dynamic};
  rs.property_maps = {pm};
  Rule r1;
  r1.id = "r1";
  r1.antecedent = {{"protocol", "DNS"}};
  r1.consequent = {{"port_group", "well_known"}};
  rs.rules = {r1};
  return rs;
}

DataTable net_table() {
  DataTable t;
  t.schema = net_schema();
  auto add = [&t](const char* proto, const char* port, double bytes) {
    Row row(3);
    row[0] = Cell::discrete(t.schema.columns[0].category_index(proto));
    row[1] = Cell::discrete(t.schema.columns[1].category_index(port));
    row[2] = Cell::continuous(bytes);
    t.rows.push_back(row);
  };
  add("DNS", "53", 120);
  add("HTTP", "80", 900);
  add("NTP", "123", 90);
  add("HTTP", "60000", 1500);
  return t;
}

}  // namespace

TEST_CASE("validate_ruleset: clean fixture gives empty report") {
  auto report = validate_ruleset(net_rules(), net_schema());
  CHECK(report.ok());
}

TEST_CASE("validate_ruleset: unknown column reported") {
  RuleSet rs = net_rules();
  rs.rules[0].antecedent[0].column = "proto";
  auto report = validate_ruleset(rs, net_schema());
  REQUIRE_FALSE(report.ok());
  CHECK(report.issues[0].kind == "unknown_column");
}

TEST_CASE("validate_ruleset: conflicting consequents reported") {
  RuleSet rs = net_rules();
  Rule r2 = rs.rules[0];
  r2.id = "r2";
  r2.consequent = {{"port_group", "dynamic"}};
  rs.rules.push_back(r2);
  auto report = validate_ruleset(rs, net_schema());
  bool found = false;
  for (const auto& i : report.issues) found |= i.kind == "conflict";
  CHECK(found);
}

TEST_CASE("validate_ruleset: uncovered value and catch-all") {
  TableSchema s = net_schema();
  RuleSet rs = net_rules();
  rs.property_maps[0].groups.pop_back();  // drop "dynamic"; 60000 now uncovered
  auto report = validate_ruleset(rs, s);
  bool found = false;
  for (const auto& i : report.issues) found |= i.kind == "uncovered_value";
  CHECK(found);

  GroupDef other{"other", GroupMembership::catch_all, {}, 0, 0, ""};
  rs.property_maps[0].groups.push_back(other);
  CHECK(validate_ruleset(rs, s).ok());
}

TEST_CASE("validate_ruleset: unknown category, repeated consequent") {
  RuleSet rs = net_rules();
  rs.rules[0].consequent[0].equals = "no_such_group";
  CHECK_FALSE(validate_ruleset(rs, net_schema()).ok());

  rs = net_rules();
  rs.rules[0].consequent.push_back({"port_group", "well_known"});
  auto report = validate_ruleset(rs, net_schema());
  bool found = false;
  for (const auto& i : report.issues) found |= i.kind == "repeated_consequent";
  CHECK(found);
}

TEST_CASE("apply_property_masks replaces values with group labels") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  const std::size_t pg = masked.schema.index_of("port_group");
  CHECK(masked.label(pg, masked.rows[0]) == "well_known");  // 53
  CHECK(masked.label(pg, masked.rows[1]) == "well_known");  // 80
  CHECK(masked.label(pg, masked.rows[3]) == "dynamic");     // 60000
  // unmasked columns pass through unchanged
  CHECK(masked.rows[3][masked.schema.index_of("bytes")].num == doctest::Approx(1500));
  CHECK(masked.label(0, masked.rows[0]) == "DNS");
  // original values are gone from the schema
  CHECK(masked.schema.find("dst_port") == nullptr);
}

TEST_CASE("masking an already-masked table is an error") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  RuleSet rs2 = net_rules();
  CHECK_THROWS_WITH_AS(apply_property_masks(masked, rs2), doctest::Contains("already masked"),
                       Error);
}

TEST_CASE("uncovered value without catch-all is a masking error") {
  RuleSet rs = net_rules();
  rs.property_maps[0].groups.pop_back();  // 60000 uncovered
  CHECK_THROWS_AS(apply_property_masks(net_table(), rs), Error);
}

TEST_CASE("evaluate_rules flags antecedents only") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  auto flags_dns = evaluate_rules(masked.rows[0], masked.schema, rs);
  REQUIRE(flags_dns.size() == 1);
  CHECK(flags_dns[0] == 1);
  auto flags_http = evaluate_rules(masked.rows[1], masked.schema, rs);
  CHECK(flags_http[0] == 0);

  RuleSet empty;
  auto none = evaluate_rules(masked.rows[0], masked.schema, empty);
  CHECK(none.empty());
}

TEST_CASE("evaluate_rules flags ignore consequent violations") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  // force a violating row: DNS with dynamic port group
  Row bad = masked.rows[0];
  bad[masked.schema.index_of("port_group")] =
      Cell::discrete(masked.schema.find("port_group")->category_index("dynamic"));
  auto flags = evaluate_rules(bad, masked.schema, rs);
  CHECK(flags[0] == 1);  // antecedent holds regardless
}

TEST_CASE("permuting the ruleset permutes flags consistently") {
  RuleSet rs = net_rules();
  Rule r2;
  r2.id = "r2";
  r2.antecedent = {{"protocol", "HTTP"}};
  r2.consequent = {{"port_group", "well_known"}};
  rs.rules.push_back(r2);
  DataTable masked = apply_property_masks(net_table(), rs);

  RuleSet swapped = rs;
  std::swap(swapped.rules[0], swapped.rules[1]);
  for (const auto& row : masked.rows) {
    auto a = evaluate_rules(row, masked.schema, rs);
    auto b = evaluate_rules(row, masked.schema, swapped);
    CHECK(a[0] == b[1]);
    CHECK(a[1] == b[0]);
  }
}

TEST_CASE("kg_query on a positive rule flag enforces the full conjunction") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  auto assignment = kg_query({"r1", 1}, rs, masked.schema);
  REQUIRE(assignment.targets.size() == 3);
  std::set<std::string> segs;
  for (const auto& t : assignment.targets) segs.insert(t.segment);
  CHECK(segs == std::set<std::string>{"r1", "protocol", "port_group"});
  for (const auto& t : assignment.targets) {
    if (t.segment == "r1") CHECK(t.category == 1);
    if (t.segment == "protocol")
      CHECK(t.category == masked.schema.find("protocol")->category_index("DNS"));
    if (t.segment == "port_group")
      CHECK(t.category == masked.schema.find("port_group")->category_index("well_known"));
  }
}

TEST_CASE("kg_query on a negative flag enforces only the flag") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  auto assignment = kg_query({"r1", 0}, rs, masked.schema);
  REQUIRE(assignment.targets.size() == 1);
  CHECK(assignment.targets[0].segment == "r1");
  CHECK(assignment.targets[0].category == 0);
}

TEST_CASE("kg_query on an ordinary cond includes implied consequents") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  // protocol=DNS implies r1's consequent (single-column antecedent)
  auto dns = kg_query({"protocol", masked.schema.find("protocol")->category_index("DNS")}, rs,
                      masked.schema);
  std::set<std::string> segs;
  for (const auto& t : dns.targets) segs.insert(t.segment);
  CHECK(segs == std::set<std::string>{"protocol", "r1", "port_group"});

  // a category no rule mentions: only itself
  auto http = kg_query({"protocol", masked.schema.find("protocol")->category_index("HTTP")}, rs,
                       masked.schema);
  REQUIRE(http.targets.size() == 1);
  CHECK(http.targets[0].segment == "protocol");
}

TEST_CASE("kg_query does not fire multi-column antecedents from one cond") {
  RuleSet rs = net_rules();
  rs.rules[0].antecedent.push_back({"port_group", "well_known"});
  DataTable masked = apply_property_masks(net_table(), rs);
  auto dns = kg_query({"protocol", masked.schema.find("protocol")->category_index("DNS")}, rs,
                      masked.schema);
  REQUIRE(dns.targets.size() == 1);  // no rule consequent pulled in
}

TEST_CASE("kg_query targets stay mutually consistent (one per segment)") {
  RuleSet rs = net_rules();
  Rule r2;
  r2.id = "r2";
  r2.antecedent = {{"protocol", "DNS"}};
  r2.consequent = {{"port_group", "well_known"}};
  rs.rules.push_back(r2);  // same consequent via a second rule
  DataTable masked = apply_property_masks(net_table(), rs);
  auto dns = kg_query({"protocol", masked.schema.find("protocol")->category_index("DNS")}, rs,
                      masked.schema);
  std::set<std::string> segs;
  for (const auto& t : dns.targets) {
    CHECK(segs.insert(t.segment).second);  // no duplicates
  }
}

TEST_CASE("decode_mask: singleton, interval membership, determinism") {
  PropertyMap pm;
  pm.name = "g";
  pm.source_column = "v";
  pm.groups = {GroupDef{"single", GroupMembership::values, {"53"}, 0, 0, ""},
               GroupDef{"dynamic", GroupMembership::interval, {}, 49152, 65535, ""}};
  CHECK(decode_mask("single", pm, 1) == "53");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    long long v = std::stoll(decode_mask("dynamic", pm, seed));
    CHECK(v >= 49152);
    CHECK(v <= 65535);
  }
  CHECK(decode_mask("dynamic", pm, 42) == decode_mask("dynamic", pm, 42));
  CHECK_THROWS_AS(decode_mask("nope", pm, 0), Error);
}

TEST_CASE("decode_mask covers small groups (statistical)") {
  // interval of width 6: after 50*w = 300 distinct seeds every member shows up
  PropertyMap pm;
  pm.name = "g";
  pm.source_column = "v";
  pm.groups = {GroupDef{"six", GroupMembership::interval, {}, 10, 15, ""}};
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 300; ++seed) seen.insert(decode_mask("six", pm, seed));
  CHECK(seen.size() == 6);
}

TEST_CASE("check_compliance counts violations per rule") {
  RuleSet rs = net_rules();
  DataTable masked = apply_property_masks(net_table(), rs);
  CHECK(check_compliance(masked, rs).rate() == doctest::Approx(1.0));

  // 1 violating row of 10
  DataTable ten;
  ten.schema = masked.schema;
  for (int i = 0; i < 10; ++i) ten.rows.push_back(masked.rows[0]);
  ten.rows[0][masked.schema.index_of("port_group")] =
      Cell::discrete(masked.schema.find("port_group")->category_index("dynamic"));
  auto rep = check_compliance(ten, rs);
  CHECK(rep.rate() == doctest::Approx(0.9));
  CHECK(rep.per_rule[0].violations == 1);
  CHECK(rep.per_rule[0].triggered == 10);

  DataTable empty;
  empty.schema = masked.schema;
  auto vac = check_compliance(empty, rs);
  CHECK(vac.rate() == doctest::Approx(1.0));
  CHECK(vac.vacuous);
}

TEST_CASE("rule file round trip and canonical fingerprint") {
  RuleSet rs = net_rules();
  const std::string path = "/tmp/kipps_rules_test.json";
  save_rules(rs, path);
  RuleSet rs2 = load_rules(path);
  CHECK(rs2.rules.size() == 1);
  CHECK(rs2.property_maps.size() == 1);
  CHECK(rules_canonical_json(rs) == rules_canonical_json(rs2));
  CHECK(rules_fingerprint(rs) == rules_fingerprint(rs2));

  rs2.rules[0].consequent[0].equals = "dynamic";
  CHECK(rules_fingerprint(rs) != rules_fingerprint(rs2));
}

TEST_CASE("catch-all groups record observed members for decoding") {
  TableSchema s = net_schema();
  RuleSet rs = net_rules();
  rs.property_maps[0].groups.pop_back();  // drop dynamic
  rs.property_maps[0].groups.push_back(GroupDef{"other", GroupMembership::catch_all, {}, 0, 0, ""});
  DataTable masked = apply_property_masks(net_table(), rs);
  const std::size_t pg = masked.schema.index_of("port_group");
  CHECK(masked.label(pg, masked.rows[3]) == "other");
  CHECK(decode_mask("other", rs.property_maps[0], 3) == "60000");
}
