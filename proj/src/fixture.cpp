#include "kipps/fixture.hpp"

#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

namespace {

FixtureBundle mini_network(std::size_t n, std::uint64_t seed) {
  FixtureBundle out;

  TableSchema schema;
  ColumnSpec protocol{"protocol", ColumnKind::discrete, {"DNS", "NTP", "HTTP"}, true, {}};
  ColumnSpec port{"dst_port", ColumnKind::discrete, {}, false, {}};
  port.masked_by = "port_group";
  ColumnSpec zone{"src_zone", ColumnKind::discrete, {"home", "gateway", "external"}, true, {}};
  ColumnSpec bytes{"bytes", ColumnKind::continuous, {}, false, {}};
  schema.columns = {protocol, port, zone, bytes};
  schema.target_column = "protocol";
  schema.sensitive_columns = {"src_zone"};
  out.table.schema = schema;

  PropertyMap pm;
  pm.name = "port_group";
  pm.source_column = "dst_port";
  pm.groups = {GroupDef{"p53", GroupMembership::values, {"53"}, 0, 0, ""},
               GroupDef{"p123", GroupMembership::values, {"123"}, 0, 0, ""},
               GroupDef{"web", GroupMembership::values, {"80", "443"}, 0, 0, ""},
               GroupDef{"dynamic", GroupMembership::interval, {}, 49152, 65535, ""}};
  out.rules.property_maps = {pm};

  Rule r1;
  r1.id = "r1";
  r1.antecedent = {{"protocol", "DNS"}};
  r1.consequent = {{"port_group", "p53"}, {"src_zone", "home"}};
  Rule r2;
  r2.id = "r2";
  r2.antecedent = {{"protocol", "NTP"}};
  r2.consequent = {{"port_group", "p123"}};
  Rule r3;
  r3.id = "r3";
  r3.antecedent = {{"protocol", "HTTP"}};
  r3.consequent = {{"port_group", "web"}};
  out.rules.rules = {r1, r2, r3};

  Rng rng = Rng::substream(seed, "mini_network");
  std::vector<std::string> cells(4);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t proto = rng.categorical({0.4, 0.2, 0.4});
    if (proto == 0) {
      cells[0] = "DNS";
      cells[1] = "53";
      cells[2] = "home";
    } else if (proto == 1) {
      cells[0] = "NTP";
      cells[1] = "123";
      cells[2] = zone.categories[rng.uniform_index(3)];
    } else {
      cells[0] = "HTTP";
      cells[1] = rng.uniform() < 0.5 ? "80" : "443";
      cells[2] = zone.categories[rng.uniform_index(3)];
    }
    const double b = rng.uniform() < 0.5 ? rng.normal(150.0, 25.0) : rng.normal(1800.0, 120.0);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", b);
    cells[3] = buf;
    out.table.append_text_row(cells);
  }
  out.table.check_invariants();
  return out;
}

}  // namespace

FixtureBundle builtin_fixture(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail_config("fixture: row count must be positive");
  if (name == "mini_network") return mini_network(n, seed);
  fail_config("unknown fixture '" + name + "' (available: mini_network)");
}

}  // namespace kipps
