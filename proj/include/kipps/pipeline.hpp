#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kipps/dp.hpp"
#include "kipps/gan.hpp"

namespace kipps {

struct FitArgs {
  std::string data_path;
  std::string schema_path;
  std::string rules_path;
  std::string model_out;
  TrainingConfig config;
};

// Masks, flags, fits, trains and persists the model; returns 0, or the
// budget-exhausted code with the flagged artifact still saved.
int cmd_fit(const FitArgs& args);

void cmd_sample(const std::string& model_path, std::size_t rows, std::uint64_t seed,
                const std::string& out_csv);

struct EvaluateArgs {
  std::string data_path;       // original
  std::string synthetic_path;  // synthetic CSV
  std::string schema_path;
  std::string report_out;
  std::optional<std::string> target;
  bool utility = true;
  std::uint64_t seed = 0;
};

void cmd_evaluate(const EvaluateArgs& args);

struct AttackArgs {
  std::string mode;  // "mia" | "aia"
  std::string data_path;
  std::string schema_path;
  std::string rules_path;      // mia: shadow synthesizer rules
  std::string synthetic_path;  // aia
  std::string report_out;
  std::string sensitive;       // aia
  std::size_t member_size = 200;
  int shadow_count = 3;
  TrainingConfig config;  // mia: shadow/target synthesizer training
  std::uint64_t seed = 0;
};

void cmd_attack(const AttackArgs& args);

// q, sigma, steps, delta -> (epsilon, achieving order); printed and returned.
EpsilonReport cmd_accountant(double q, double sigma, std::int64_t steps, double delta);

// writes <prefix>.csv, <prefix>_schema.json, <prefix>_rules.json
void cmd_fixture(const std::string& name, std::size_t rows, std::uint64_t seed,
                 const std::string& out_prefix);

}  // namespace kipps
