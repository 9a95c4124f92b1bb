#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kipps/attacks.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

using namespace kipps;

namespace {

// well-separated population: rows carry near-unique continuous coordinates,
// plus a discrete class usable for the confidence feature
DataTable separated_population(std::size_t n, std::uint64_t seed) {
  TableSchema s;
  s.columns = {ColumnSpec{"x", ColumnKind::continuous, {}, false, {}},
               ColumnSpec{"y", ColumnKind::continuous, {}, false, {}},
               ColumnSpec{"group", ColumnKind::discrete, {"g0", "g1"}, true, {}}};
  s.target_column = "group";
  DataTable t;
  t.schema = s;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Row row(3);
    const bool g1 = rng.uniform() < 0.5;
    row[0] = Cell::continuous((g1 ? 4.0 : -4.0) + rng.normal() * 0.5 +
                              static_cast<double>(i) * 1e-4);
    row[1] = Cell::continuous(rng.normal() * 0.5);
    row[2] = Cell::discrete(g1 ? 1 : 0);
    t.rows.push_back(row);
  }
  return t;
}

// draws fresh rows from the same population law, ignoring the members
SynthesizerFn independent_sampler(std::uint64_t law_seed) {
  return [law_seed](const DataTable& members, std::uint64_t seed) {
    return separated_population(members.row_count(), Rng::derive(law_seed, "fresh", seed));
  };
}

SynthesizerFn verbatim_copier() {
  return [](const DataTable& members, std::uint64_t) { return members; };
}

// table whose sensitive column is independent of everything else
DataTable independent_sensitive_table(std::size_t n, std::uint64_t seed, double majority) {
  TableSchema s;
  s.columns = {ColumnSpec{"q1", ColumnKind::continuous, {}, false, {}},
               ColumnSpec{"q2", ColumnKind::discrete, {"a", "b"}, true, {}},
               ColumnSpec{"secret", ColumnKind::discrete, {"no", "yes"}, true, {}}};
  s.sensitive_columns = {"secret"};
  DataTable t;
  t.schema = s;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Row row(3);
    row[0] = Cell::continuous(rng.normal());
    row[1] = Cell::discrete(rng.uniform() < 0.5 ? 0 : 1);
    row[2] = Cell::discrete(rng.uniform() < majority ? 0 : 1);
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST_CASE("mia: independent synthetic data scores near chance") {
  DataTable population = separated_population(1400, 3);
  AttackConfig config;
  config.member_size = 150;
  config.shadow_count = 3;
  double acc_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    config.seed = seed;
    acc_sum += membership_inference(config, independent_sampler(99), population);
  }
  const double mean_acc = acc_sum / 3.0;
  CHECK(mean_acc >= 0.4);
  CHECK(mean_acc <= 0.6);
}

TEST_CASE("mia: verbatim-copy synthesizer is caught") {
  DataTable population = separated_population(1400, 5);
  AttackConfig config;
  config.member_size = 150;
  config.shadow_count = 3;
  config.seed = 1;
  const double acc = membership_inference(config, verbatim_copier(), population);
  CHECK(acc >= 0.9);
}

TEST_CASE("mia: population too small for disjoint shadow pools") {
  DataTable population = separated_population(100, 7);
  AttackConfig config;
  config.member_size = 50;
  config.shadow_count = 3;
  CHECK_THROWS_WITH_AS(membership_inference(config, verbatim_copier(), population),
                       doctest::Contains("disjoint shadow pools"), Error);
}

TEST_CASE("aia: independent sensitive column predicts at the majority rate") {
  const double majority = 0.7;
  DataTable original = independent_sensitive_table(1500, 11, majority);
  DataTable synthetic = independent_sensitive_table(1500, 12, majority);
  AttackConfig config;
  config.seed = 2;
  const double acc = attribute_inference(config, synthetic, original, "secret");
  CHECK(std::abs(acc - majority) <= 0.05);
}

TEST_CASE("aia: deterministic dependence preserved by the synthetic data is exposed") {
  auto deterministic_table = [](std::size_t n, std::uint64_t seed) {
    TableSchema s;
    s.columns = {ColumnSpec{"q", ColumnKind::discrete, {"lo", "hi"}, true, {}},
                 ColumnSpec{"secret", ColumnKind::discrete, {"no", "yes"}, true, {}}};
    DataTable t;
    t.schema = s;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      const bool hi = rng.uniform() < 0.5;
      Row row(2);
      row[0] = Cell::discrete(hi ? 1 : 0);
      row[1] = Cell::discrete(hi ? 1 : 0);  // secret is a function of q
      t.rows.push_back(row);
    }
    return t;
  };
  DataTable original = deterministic_table(800, 21);
  DataTable synthetic = deterministic_table(800, 22);
  AttackConfig config;
  config.seed = 4;
  CHECK(attribute_inference(config, synthetic, original, "secret") >= 0.99);
}

TEST_CASE("aia rejects continuous sensitive columns") {
  DataTable original = independent_sensitive_table(100, 31, 0.6);
  AttackConfig config;
  CHECK_THROWS_AS(attribute_inference(config, original, original, "q1"), Error);
  CHECK_THROWS_AS(attribute_inference(config, original, original, "nope"), Error);
}
