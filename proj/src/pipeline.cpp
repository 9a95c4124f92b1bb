#include "kipps/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "kipps/artifact.hpp"
#include "kipps/attacks.hpp"
#include "kipps/error.hpp"
#include "kipps/eval.hpp"
#include "kipps/fixture.hpp"

namespace kipps {

int cmd_fit(const FitArgs& args) {
  const TableSchema schema = load_schema(args.schema_path);
  const DataTable table = load_csv(args.data_path, schema);
  RuleSet rules = load_rules(args.rules_path);
  {
    ValidationReport rep = validate_ruleset(rules, table.schema);
    if (!rep.ok()) fail_data("ruleset invalid:\n" + rep.to_string());
  }

  Synthesizer model = fit_synthesizer(table, std::move(rules), args.config);
  save_model(model, args.model_out);

  if (!model.state.history.empty()) {
    const LossRecord& last = model.state.history.back();
    std::printf("fit: %lld steps, critic %.4f, generator %.4f, rule_ce %.4f\n",
                static_cast<long long>(model.state.steps_done), last.critic, last.generator,
                last.rule_ce);
  } else {
    std::printf("fit: 0 steps\n");
  }
  if (model.state.dp_enabled) {
    const EpsilonReport eps = report_epsilon(model.state.accountant, model.config.dp->delta);
    std::printf("fit: dp epsilon %.4f at order %.2f (delta %.2e)\n", eps.epsilon, eps.order,
                model.config.dp->delta);
  }
  std::printf("fit: model written to %s\n", args.model_out.c_str());
  if (model.state.budget_exhausted) {
    std::printf("fit: budget_exhausted (artifact saved with flag)\n");
    return static_cast<int>(Errc::budget_exhausted);
  }
  return 0;
}

void cmd_sample(const std::string& model_path, std::size_t rows, std::uint64_t seed,
                const std::string& out_csv) {
  const Synthesizer model = load_model(model_path);
  const DataTable sample = sample_synthetic(model, rows, seed);
  write_csv(sample, out_csv);
  std::printf("sample: %zu rows written to %s\n", sample.row_count(), out_csv.c_str());
}

void cmd_evaluate(const EvaluateArgs& args) {
  const TableSchema schema = load_schema(args.schema_path);
  const DataTable original = load_csv(args.data_path, schema);
  const DataTable synthetic = load_csv(args.synthetic_path, schema);

  EvalOptions options;
  options.target = args.target;
  options.utility = args.utility;
  options.seed = args.seed;
  const EvalReport report = evaluate(original, synthetic, options);
  save_report(report, args.report_out);
  std::fputs(report_summary(report).c_str(), stdout);
  std::printf("eval: report written to %s\n", args.report_out.c_str());
}

void cmd_attack(const AttackArgs& args) {
  nlohmann::json report;
  report["mode"] = args.mode;
  report["seed"] = args.seed;
  double accuracy = 0.0;

  if (args.mode == "mia") {
    const TableSchema schema = load_schema(args.schema_path);
    const DataTable population = load_csv(args.data_path, schema);
    RuleSet rules = load_rules(args.rules_path);

    AttackConfig config;
    config.member_size = args.member_size;
    config.shadow_count = args.shadow_count;
    config.seed = args.seed;

    TrainingConfig base = args.config;
    SynthesizerFn synthesize = [&base, &rules](const DataTable& members, std::uint64_t seed) {
      TrainingConfig cfg = base;
      cfg.seed = seed;
      RuleSet rules_copy = rules;
      Synthesizer model = fit_synthesizer(members, std::move(rules_copy), cfg);
      return sample_synthetic(model, members.row_count(), Rng::derive(seed, "attack_sample"));
    };
    accuracy = membership_inference(config, synthesize, population);
    report["member_size"] = config.member_size;
    report["shadow_count"] = config.shadow_count;
    report["accuracy"] = accuracy;
    std::printf("attack mia: balanced accuracy %.4f (0.5 = resilient)\n", accuracy);
  } else if (args.mode == "aia") {
    const TableSchema schema = load_schema(args.schema_path);
    const DataTable original = load_csv(args.data_path, schema);
    const DataTable synthetic = load_csv(args.synthetic_path, schema);
    std::string sensitive = args.sensitive;
    if (sensitive.empty()) {
      if (original.schema.sensitive_columns.empty())
        fail_config("--sensitive required (schema lists no sensitive columns)");
      sensitive = original.schema.sensitive_columns.front();
    }
    AttackConfig config;
    config.sensitive_column = sensitive;
    config.seed = args.seed;
    accuracy = attribute_inference(config, synthetic, original, sensitive);
    report["sensitive"] = sensitive;
    report["accuracy"] = accuracy;
    std::printf("attack aia: accuracy %.4f on '%s' (lower = stronger privacy)\n", accuracy,
                sensitive.c_str());
  } else {
    fail_config("--mode must be 'mia' or 'aia'");
  }

  if (!args.report_out.empty()) {
    std::ofstream out(args.report_out);
    if (!out) fail_data("cannot write report '" + args.report_out + "'");
    out << report.dump(2) << '\n';
  }
}

EpsilonReport cmd_accountant(double q, double sigma, std::int64_t steps, double delta) {
  if (steps < 0) fail_config("accountant: steps must be nonnegative");
  if (q < 0.0 || q > 1.0) fail_config("accountant: q must lie in [0,1]");
  AccountantState state = make_accountant();
  if (steps > 0) {
    for (std::size_t i = 0; i < state.orders.size(); ++i)
      state.accumulated_rdp[i] =
          static_cast<double>(steps) * rdp_subsampled_gaussian(q, sigma, state.orders[i]);
    state.steps = steps;
  }
  const EpsilonReport rep = report_epsilon(state, delta);
  if (rep.no_steps)
    std::printf("accountant: epsilon 0 (no steps)\n");
  else
    std::printf("accountant: epsilon %.6f at order %.2f (q=%g sigma=%g steps=%lld delta=%g)\n",
                rep.epsilon, rep.order, q, sigma, static_cast<long long>(steps), delta);
  return rep;
}

void cmd_fixture(const std::string& name, std::size_t rows, std::uint64_t seed,
                 const std::string& out_prefix) {
  FixtureBundle fixture = builtin_fixture(name, rows, seed);
  const std::string csv = out_prefix + ".csv";
  const std::string schema = out_prefix + "_schema.json";
  const std::string rules = out_prefix + "_rules.json";
  write_csv(fixture.table, csv);
  save_schema(fixture.table.schema, schema);
  save_rules(fixture.rules, rules);
  std::printf("fixture: wrote %s, %s, %s\n", csv.c_str(), schema.c_str(), rules.c_str());
}

}  // namespace kipps
