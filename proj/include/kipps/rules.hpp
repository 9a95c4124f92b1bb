#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kipps/schema.hpp"

namespace kipps {

enum class GroupMembership { values, interval, prefix, catch_all };

struct GroupDef {
  std::string label;
  GroupMembership membership = GroupMembership::values;
  std::vector<std::string> values;  // explicit set; also the recorded members of a catch-all
  long long lo = 0, hi = 0;         // interval bounds, inclusive
  std::string prefix;

  bool contains(const std::string& value) const;
};

struct PropertyMap {
  std::string name;
  std::string source_column;
  std::vector<GroupDef> groups;

  const GroupDef* find_group(const std::string& label) const;
  // Index of the first matching non-catch-all group, else the catch-all, else -1.
  int group_index_for(const std::string& value) const;
};

struct Predicate {
  std::string column;  // schema column or PropertyMap name
  std::string equals;  // category label (group label for mask columns)
};

struct Rule {
  std::string id;
  std::vector<Predicate> antecedent;
  std::vector<Predicate> consequent;
};

struct RuleSet {
  std::vector<Rule> rules;
  std::vector<PropertyMap> property_maps;

  const PropertyMap* find_map(const std::string& name) const;
  const Rule* find_rule(const std::string& id) const;
};

struct ValidationIssue {
  std::string kind;    // "unknown_column", "unknown_category", "conflict", "uncovered_value", ...
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

// Reports unknown columns/categories, conflicting consequents, malformed
// groups, and per-map coverage gaps. Empty report == valid. The schema is
// the pre-mask schema with categories already frozen by a load.
ValidationReport validate_ruleset(const RuleSet& rules, const TableSchema& schema);

// Replaces each map's source column by a discrete column of group labels
// (same position, named after the map). Records observed members into
// catch-all groups, which is why `rules` is mutable. Applying to an
// already-masked table is an error.
DataTable apply_property_masks(const DataTable& table, RuleSet& rules);

// Flag k = 1 iff rule k's antecedent holds on the row (masked schema).
std::vector<std::uint8_t> evaluate_rules(const Row& row, const TableSchema& masked_schema,
                                         const RuleSet& rules);

// One enforced (segment, category) assignment; `segment` is a masked-schema
// column name or a rule id (category 1 = flag true).
struct EnforcedTarget {
  std::string segment;
  std::int32_t category = 0;
};

struct EnforcedAssignment {
  std::vector<EnforcedTarget> targets;
};

// What a conditional vector selects: a single (segment, category) pair.
struct CondSelection {
  std::string segment;  // column name or rule id
  std::int32_t category = 0;
};

// The domain rule extracted for a condition: the condition's own assignment
// plus every assignment it implies through the rule set.
EnforcedAssignment kg_query(const CondSelection& cond, const RuleSet& rules,
                            const TableSchema& masked_schema);

// Deterministic uniform draw from the group's membership.
std::string decode_mask(const std::string& group_label, const PropertyMap& map,
                        std::uint64_t seed);

struct RuleCompliance {
  std::string rule_id;
  std::size_t triggered = 0;
  std::size_t violations = 0;
};

struct ComplianceReport {
  std::vector<RuleCompliance> per_rule;
  std::size_t total_rows = 0;
  std::size_t violating_rows = 0;
  bool vacuous = false;  // empty table
  double rate() const {
    if (total_rows == 0) return 1.0;
    return 1.0 - static_cast<double>(violating_rows) / static_cast<double>(total_rows);
  }
};

// A row violates rule k iff the antecedent holds and any consequent
// assignment fails. Operates on the masked table.
ComplianceReport check_compliance(const DataTable& masked_table, const RuleSet& rules);

RuleSet load_rules(const std::string& path);
void save_rules(const RuleSet& rules, const std::string& path);
std::string rules_to_json_string(const RuleSet& rules, bool include_observed);
RuleSet rules_from_json_string(const std::string& text);

// Canonical form (observed catch-all members excluded) and its hash, the
// value embedded in model files.
std::string rules_canonical_json(const RuleSet& rules);
std::string rules_fingerprint(const RuleSet& rules);

}  // namespace kipps
