#include "kipps/rules.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

namespace {

bool parse_ll(const std::string& text, long long& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

bool GroupDef::contains(const std::string& value) const {
  switch (membership) {
    case GroupMembership::values:
      return std::find(values.begin(), values.end(), value) != values.end();
    case GroupMembership::interval: {
      long long v = 0;
      return parse_ll(value, v) && v >= lo && v <= hi;
    }
    case GroupMembership::prefix:
      return value.size() >= prefix.size() && value.compare(0, prefix.size(), prefix) == 0;
    case GroupMembership::catch_all:
      return true;
  }
  return false;
}

const GroupDef* PropertyMap::find_group(const std::string& label) const {
  for (const auto& g : groups)
    if (g.label == label) return &g;
  return nullptr;
}

int PropertyMap::group_index_for(const std::string& value) const {
  int catch_all = -1;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].membership == GroupMembership::catch_all) {
      catch_all = static_cast<int>(i);
      continue;
    }
    if (groups[i].contains(value)) return static_cast<int>(i);
  }
  return catch_all;
}

const PropertyMap* RuleSet::find_map(const std::string& name) const {
  for (const auto& m : property_maps)
    if (m.name == name) return &m;
  return nullptr;
}

const Rule* RuleSet::find_rule(const std::string& id) const {
  for (const auto& r : rules)
    if (r.id == id) return &r;
  return nullptr;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i.kind << ": " << i.detail << '\n';
  return os.str();
}

namespace {

// Categories a predicate may legally name for `column`: group labels for a
// mask column, otherwise the schema column's category list.
bool predicate_category_known(const Predicate& p, const RuleSet& rules,
                              const TableSchema& schema) {
  if (const PropertyMap* map = rules.find_map(p.column)) return map->find_group(p.equals) != nullptr;
  const ColumnSpec* col = schema.find(p.column);
  if (!col || col->kind != ColumnKind::discrete) return false;
  return col->category_index(p.equals) >= 0;
}

bool predicate_column_known(const std::string& column, const RuleSet& rules,
                            const TableSchema& schema) {
  if (rules.find_map(column)) return true;
  const ColumnSpec* col = schema.find(column);
  return col && col->kind == ColumnKind::discrete;
}

std::string predicate_set_key(const std::vector<Predicate>& preds) {
  std::vector<std::string> parts;
  parts.reserve(preds.size());
  for (const auto& p : preds) parts.push_back(p.column + "=" + p.equals);
  std::sort(parts.begin(), parts.end());
  std::string key;
  for (const auto& s : parts) {
    key += s;
    key += ';';
  }
  return key;
}

}  // namespace

ValidationReport validate_ruleset(const RuleSet& rules, const TableSchema& schema) {
  ValidationReport rep;
  auto add = [&rep](std::string kind, std::string detail) {
    rep.issues.push_back({std::move(kind), std::move(detail)});
  };

  std::unordered_set<std::string> map_names;
  for (const auto& m : rules.property_maps) {
    if (!map_names.insert(m.name).second) add("duplicate_map", m.name);
    const ColumnSpec* src = schema.find(m.source_column);
    if (!src) {
      add("unknown_column", "map '" + m.name + "' source column '" + m.source_column + "'");
    } else if (src->kind != ColumnKind::discrete) {
      add("bad_source", "map '" + m.name + "' source column '" + m.source_column +
                            "' is continuous");
    }
    std::unordered_set<std::string> labels;
    int catch_alls = 0;
    for (const auto& g : m.groups) {
      if (!labels.insert(g.label).second)
        add("duplicate_group", "map '" + m.name + "' group '" + g.label + "'");
      switch (g.membership) {
        case GroupMembership::values:
          if (g.values.empty())
            add("empty_group", "map '" + m.name + "' group '" + g.label + "'");
          break;
        case GroupMembership::interval:
          if (g.lo > g.hi)
            add("bad_interval", "map '" + m.name + "' group '" + g.label + "'");
          break;
        case GroupMembership::prefix:
          if (g.prefix.empty())
            add("empty_prefix", "map '" + m.name + "' group '" + g.label + "'");
          break;
        case GroupMembership::catch_all:
          ++catch_alls;
          break;
      }
    }
    if (catch_alls > 1) add("multiple_catch_all", "map '" + m.name + "'");
    // Coverage over the values frozen in the schema.
    if (src && src->kind == ColumnKind::discrete && catch_alls == 0) {
      for (const auto& value : src->categories) {
        if (m.group_index_for(value) < 0)
          add("uncovered_value", "map '" + m.name + "' value '" + value + "'");
      }
    }
  }

  std::unordered_set<std::string> rule_ids;
  for (const auto& r : rules.rules) {
    if (!rule_ids.insert(r.id).second) add("duplicate_rule", r.id);
    if (r.antecedent.empty()) add("empty_antecedent", r.id);
    if (r.consequent.empty()) add("empty_consequent", r.id);
    std::map<std::string, std::string> ante_values;
    for (const auto& p : r.antecedent) {
      if (!predicate_column_known(p.column, rules, schema))
        add("unknown_column", "rule '" + r.id + "' antecedent column '" + p.column + "'");
      else if (!predicate_category_known(p, rules, schema))
        add("unknown_category",
            "rule '" + r.id + "' antecedent '" + p.column + "=" + p.equals + "'");
      auto [it, inserted] = ante_values.emplace(p.column, p.equals);
      if (!inserted && it->second != p.equals)
        add("contradictory_antecedent", "rule '" + r.id + "' column '" + p.column + "'");
    }
    std::map<std::string, std::string> cons_values;
    for (const auto& p : r.consequent) {
      if (!predicate_column_known(p.column, rules, schema))
        add("unknown_column", "rule '" + r.id + "' consequent column '" + p.column + "'");
      else if (!predicate_category_known(p, rules, schema))
        add("unknown_category",
            "rule '" + r.id + "' consequent '" + p.column + "=" + p.equals + "'");
      auto [it, inserted] = cons_values.emplace(p.column, p.equals);
      if (!inserted)
        add("repeated_consequent", "rule '" + r.id + "' column '" + p.column + "'");
      auto a = ante_values.find(p.column);
      if (a != ante_values.end() && a->second != p.equals)
        add("self_conflict", "rule '" + r.id + "' column '" + p.column + "'");
    }
  }

  // Two rules with the same antecedent must not disagree on a consequent column.
  std::map<std::string, std::vector<const Rule*>> by_antecedent;
  for (const auto& r : rules.rules) by_antecedent[predicate_set_key(r.antecedent)].push_back(&r);
  for (const auto& [key, group] : by_antecedent) {
    (void)key;
    if (group.size() < 2) continue;
    std::map<std::string, std::pair<std::string, std::string>> seen;  // column -> (value, rule)
    for (const Rule* r : group) {
      for (const auto& p : r->consequent) {
        auto [it, inserted] = seen.emplace(p.column, std::make_pair(p.equals, r->id));
        if (!inserted && it->second.first != p.equals)
          add("conflict", "rules '" + it->second.second + "' and '" + r->id +
                              "' share an antecedent but disagree on '" + p.column + "'");
      }
    }
  }
  return rep;
}

DataTable apply_property_masks(const DataTable& table, RuleSet& rules) {
  for (const auto& m : rules.property_maps) {
    if (!table.schema.find(m.source_column)) {
      if (table.schema.find(m.name))
        fail_data("table already masked: column '" + m.name + "' present and source '" +
                  m.source_column + "' absent");
      fail_data("mask source column '" + m.source_column + "' missing");
    }
  }
  {
    ValidationReport rep = validate_ruleset(rules, table.schema);
    if (!rep.ok()) fail_data("ruleset invalid:\n" + rep.to_string());
  }

  DataTable out;
  out.schema = table.schema;
  std::vector<int> mask_of_column(table.schema.column_count(), -1);
  for (std::size_t mi = 0; mi < rules.property_maps.size(); ++mi) {
    PropertyMap& m = rules.property_maps[mi];
    const std::size_t ci = table.schema.index_of(m.source_column);
    mask_of_column[ci] = static_cast<int>(mi);
    ColumnSpec& spec = out.schema.columns[ci];
    spec.name = m.name;
    spec.kind = ColumnKind::discrete;
    spec.categories.clear();
    for (const auto& g : m.groups) spec.categories.push_back(g.label);
    spec.categories_closed = true;
    spec.masked_by = m.name;
    if (out.schema.target_column == m.source_column) out.schema.target_column = m.name;
    for (auto& s : out.schema.sensitive_columns)
      if (s == m.source_column) s = m.name;
  }

  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Row masked = row;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (mask_of_column[c] < 0) continue;
      PropertyMap& m = rules.property_maps[static_cast<std::size_t>(mask_of_column[c])];
      const std::string& value = table.label(c, row);
      int gi = m.group_index_for(value);
      if (gi < 0)
        fail_data("value '" + value + "' in column '" + m.source_column +
                  "' is not covered by any group of map '" + m.name + "'");
      GroupDef& g = m.groups[static_cast<std::size_t>(gi)];
      if (g.membership == GroupMembership::catch_all &&
          std::find(g.values.begin(), g.values.end(), value) == g.values.end())
        g.values.push_back(value);
      masked[c] = Cell::discrete(gi);
    }
    out.rows.push_back(std::move(masked));
  }
  out.check_invariants();
  return out;
}

namespace {

bool predicate_holds(const Predicate& p, const Row& row, const TableSchema& schema) {
  const std::size_t ci = schema.index_of(p.column);
  const ColumnSpec& col = schema.columns[ci];
  const std::int32_t want = col.category_index(p.equals);
  return want >= 0 && row[ci].cat == want;
}

}  // namespace

std::vector<std::uint8_t> evaluate_rules(const Row& row, const TableSchema& masked_schema,
                                         const RuleSet& rules) {
  std::vector<std::uint8_t> flags(rules.rules.size(), 0);
  for (std::size_t k = 0; k < rules.rules.size(); ++k) {
    bool hold = true;
    for (const auto& p : rules.rules[k].antecedent) {
      if (!predicate_holds(p, row, masked_schema)) {
        hold = false;
        break;
      }
    }
    flags[k] = hold ? 1 : 0;
  }
  return flags;
}

EnforcedAssignment kg_query(const CondSelection& cond, const RuleSet& rules,
                            const TableSchema& masked_schema) {
  EnforcedAssignment out;
  std::set<std::string> seen;
  auto push = [&](const std::string& segment, std::int32_t category) {
    if (seen.insert(segment).second) out.targets.push_back({segment, category});
  };
  auto category_of = [&](const Predicate& p) -> std::int32_t {
    const ColumnSpec* col = masked_schema.find(p.column);
    if (!col) fail_data("kg_query: unknown column '" + p.column + "'");
    std::int32_t idx = col->category_index(p.equals);
    if (idx < 0) fail_data("kg_query: unknown category '" + p.equals + "' in '" + p.column + "'");
    return idx;
  };

  if (const Rule* rule = rules.find_rule(cond.segment)) {
    if (cond.category != 0 && cond.category != 1) fail_data("kg_query: malformed rule-flag cond");
    push(rule->id, cond.category);
    if (cond.category == 1) {
      for (const auto& p : rule->antecedent) push(p.column, category_of(p));
      for (const auto& p : rule->consequent) push(p.column, category_of(p));
    }
    return out;
  }

  const ColumnSpec* col = masked_schema.find(cond.segment);
  if (!col || col->kind != ColumnKind::discrete)
    fail_data("kg_query: cond segment '" + cond.segment + "' is not a discrete column");
  if (cond.category < 0 || static_cast<std::size_t>(cond.category) >= col->categories.size())
    fail_data("kg_query: cond category out of range");
  push(cond.segment, cond.category);
  const std::string& value = col->categories[static_cast<std::size_t>(cond.category)];
  // Consequents of every rule whose entire antecedent is implied by this
  // single assignment; multi-column antecedents are enforced only via flags.
  for (const auto& rule : rules.rules) {
    if (rule.antecedent.size() != 1) continue;
    const Predicate& a = rule.antecedent.front();
    if (a.column != cond.segment || a.equals != value) continue;
    push(rule.id, 1);
    for (const auto& p : rule.consequent) push(p.column, category_of(p));
  }
  return out;
}

std::string decode_mask(const std::string& group_label, const PropertyMap& map,
                        std::uint64_t seed) {
  const GroupDef* g = map.find_group(group_label);
  if (!g) fail_data("decode_mask: unknown group '" + group_label + "' in map '" + map.name + "'");
  Rng rng = Rng::substream(seed, "decode_mask");
  switch (g->membership) {
    case GroupMembership::values:
      if (g->values.empty()) fail_data("decode_mask: empty group '" + group_label + "'");
      return g->values[rng.uniform_index(g->values.size())];
    case GroupMembership::interval: {
      const auto width = static_cast<std::uint64_t>(g->hi - g->lo + 1);
      return std::to_string(g->lo + static_cast<long long>(rng.uniform_index(width)));
    }
    case GroupMembership::prefix:
      return g->prefix + std::to_string(rng.uniform_index(10000));
    case GroupMembership::catch_all:
      if (g->values.empty())
        fail_data("decode_mask: catch-all group '" + group_label + "' has no recorded members");
      return g->values[rng.uniform_index(g->values.size())];
  }
  fail_data("decode_mask: bad membership");
}

ComplianceReport check_compliance(const DataTable& masked_table, const RuleSet& rules) {
  ComplianceReport rep;
  rep.total_rows = masked_table.row_count();
  rep.vacuous = masked_table.rows.empty();
  rep.per_rule.reserve(rules.rules.size());
  for (const auto& r : rules.rules) rep.per_rule.push_back({r.id, 0, 0});

  for (const auto& row : masked_table.rows) {
    bool violates = false;
    for (std::size_t k = 0; k < rules.rules.size(); ++k) {
      const Rule& rule = rules.rules[k];
      bool hold = true;
      for (const auto& p : rule.antecedent)
        if (!predicate_holds(p, row, masked_table.schema)) {
          hold = false;
          break;
        }
      if (!hold) continue;
      rep.per_rule[k].triggered++;
      for (const auto& p : rule.consequent) {
        if (!predicate_holds(p, row, masked_table.schema)) {
          rep.per_rule[k].violations++;
          violates = true;
          break;
        }
      }
    }
    if (violates) rep.violating_rows++;
  }
  return rep;
}

namespace {

nlohmann::json group_to_json(const GroupDef& g, bool include_observed) {
  nlohmann::json j;
  j["label"] = g.label;
  switch (g.membership) {
    case GroupMembership::values:
      j["values"] = g.values;
      break;
    case GroupMembership::interval:
      j["interval"] = {g.lo, g.hi};
      break;
    case GroupMembership::prefix:
      j["prefix"] = g.prefix;
      break;
    case GroupMembership::catch_all:
      j["catch_all"] = true;
      if (include_observed && !g.values.empty()) j["observed"] = g.values;
      break;
  }
  return j;
}

GroupDef group_from_json(const nlohmann::json& j) {
  GroupDef g;
  g.label = j.at("label").get<std::string>();
  if (j.contains("values")) {
    g.membership = GroupMembership::values;
    g.values = j["values"].get<std::vector<std::string>>();
  } else if (j.contains("interval")) {
    g.membership = GroupMembership::interval;
    auto iv = j["interval"];
    if (!iv.is_array() || iv.size() != 2) fail_data("rule file: interval must be [lo, hi]");
    g.lo = iv[0].get<long long>();
    g.hi = iv[1].get<long long>();
  } else if (j.contains("prefix")) {
    g.membership = GroupMembership::prefix;
    g.prefix = j["prefix"].get<std::string>();
  } else if (j.contains("catch_all") && j["catch_all"].get<bool>()) {
    g.membership = GroupMembership::catch_all;
    if (j.contains("observed")) g.values = j["observed"].get<std::vector<std::string>>();
  } else {
    fail_data("rule file: group '" + g.label + "' has no membership");
  }
  return g;
}

nlohmann::json predicates_to_json(const std::vector<Predicate>& preds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : preds) arr.push_back({{"column", p.column}, {"equals", p.equals}});
  return arr;
}

std::vector<Predicate> predicates_from_json(const nlohmann::json& arr) {
  std::vector<Predicate> out;
  for (const auto& j : arr)
    out.push_back({j.at("column").get<std::string>(), j.at("equals").get<std::string>()});
  return out;
}

nlohmann::json rules_to_json(const RuleSet& rules, bool include_observed) {
  nlohmann::json j;
  j["property_maps"] = nlohmann::json::array();
  for (const auto& m : rules.property_maps) {
    nlohmann::json jm;
    jm["name"] = m.name;
    jm["source_column"] = m.source_column;
    jm["groups"] = nlohmann::json::array();
    for (const auto& g : m.groups) jm["groups"].push_back(group_to_json(g, include_observed));
    j["property_maps"].push_back(std::move(jm));
  }
  j["rules"] = nlohmann::json::array();
  for (const auto& r : rules.rules) {
    j["rules"].push_back({{"id", r.id},
                          {"antecedent", predicates_to_json(r.antecedent)},
                          {"consequent", predicates_to_json(r.consequent)}});
  }
  return j;
}

RuleSet rules_from_json(const nlohmann::json& j) {
  RuleSet rs;
  if (j.contains("property_maps")) {
    for (const auto& jm : j["property_maps"]) {
      PropertyMap m;
      m.name = jm.at("name").get<std::string>();
      m.source_column = jm.at("source_column").get<std::string>();
      for (const auto& jg : jm.at("groups")) m.groups.push_back(group_from_json(jg));
      rs.property_maps.push_back(std::move(m));
    }
  }
  if (j.contains("rules")) {
    for (const auto& jr : j["rules"]) {
      Rule r;
      r.id = jr.at("id").get<std::string>();
      r.antecedent = predicates_from_json(jr.at("antecedent"));
      r.consequent = predicates_from_json(jr.at("consequent"));
      rs.rules.push_back(std::move(r));
    }
  }
  return rs;
}

}  // namespace

RuleSet load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open rule file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return rules_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail_data("rule file '" + path + "': " + e.what());
  }
}

void save_rules(const RuleSet& rules, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write rule file '" + path + "'");
  out << rules_to_json(rules, false).dump(2) << '\n';
}

std::string rules_to_json_string(const RuleSet& rules, bool include_observed) {
  return rules_to_json(rules, include_observed).dump();
}

RuleSet rules_from_json_string(const std::string& text) {
  try {
    return rules_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    fail_data(std::string("rules JSON: ") + e.what());
  }
}

std::string rules_canonical_json(const RuleSet& rules) {
  return rules_to_json(rules, false).dump();
}

std::string rules_fingerprint(const RuleSet& rules) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(rules_canonical_json(rules))));
  return std::string(buf);
}

}  // namespace kipps
