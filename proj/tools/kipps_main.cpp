#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kipps/error.hpp"
#include "kipps/pipeline.hpp"

namespace {

struct CliOptions {
  std::string data, schema, rules, model, out, report, synthetic;
  std::string mode = "mia", sensitive, fixture_name = "mini_network";
  std::size_t rows = 1000;
  std::uint64_t seed = 0;
  kipps::TrainingConfig config;
  bool dp = false;
  double sigma = 1.0, clip = 1.0, delta = 1e-5;
  std::optional<double> epsilon_ceiling;
  double q = 0.01;
  std::int64_t steps = 0;
  std::size_t member_size = 200;
  int shadow_count = 3;
  bool no_utility = false;
  std::string target;
};

void add_train_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--epochs", opt.config.epochs, "training epochs");
  cmd->add_option("--batch", opt.config.batch_size, "batch size");
  cmd->add_option("--rule-weight", opt.config.rule_weight, "weight of the rule cross-entropy");
  cmd->add_option("--n-critic", opt.config.n_critic, "critic updates per generator update");
  cmd->add_option("--noise-dim", opt.config.noise_dim, "generator noise dimension");
  cmd->add_option("--gen-hidden", opt.config.gen_hidden, "generator hidden widths");
  cmd->add_option("--crit-hidden", opt.config.crit_hidden, "critic hidden widths");
  cmd->add_flag("--dp", opt.dp, "train the critic under DP-SGD");
  cmd->add_option("--sigma", opt.sigma, "DP noise multiplier");
  cmd->add_option("--clip", opt.clip, "DP per-example clip norm");
  cmd->add_option("--delta", opt.delta, "DP delta");
  cmd->add_option("--epsilon-ceiling",
                  [&opt](const std::vector<std::string>& values) {
                    opt.epsilon_ceiling = std::stod(values.front());
                    return true;
                  },
                  "halt when the accountant exceeds this epsilon");
}

void finalize_training_config(CliOptions& opt, std::size_t table_rows_hint) {
  opt.config.seed = opt.seed;
  if (opt.dp) {
    kipps::DpConfig dp;
    dp.clip_norm = opt.clip;
    dp.noise_multiplier = opt.sigma;
    dp.delta = opt.delta;
    dp.epsilon_ceiling = opt.epsilon_ceiling;
    dp.sampling_rate = 0.01;
    if (table_rows_hint > 0)
      dp.sampling_rate = std::min(
          1.0, static_cast<double>(opt.config.batch_size) / static_cast<double>(table_rows_hint));
    opt.config.dp = dp;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kipps: knowledge-guided differentially private tabular synthesizer"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* fit = app.add_subcommand("fit", "train a synthesizer and persist the model");
  fit->add_option("--data", opt.data, "training CSV")->required();
  fit->add_option("--schema", opt.schema, "schema JSON")->required();
  fit->add_option("--rules", opt.rules, "rule file JSON")->required();
  fit->add_option("--model", opt.model, "model output path")->required();
  fit->add_option("--seed", opt.seed, "master seed")->required();
  add_train_flags(fit, opt);

  auto* sample = app.add_subcommand("sample", "draw synthetic rows from a fitted model");
  sample->add_option("--model", opt.model, "model path")->required();
  sample->add_option("--rows", opt.rows, "rows to generate")->required();
  sample->add_option("--seed", opt.seed, "sampling seed")->required();
  sample->add_option("--out", opt.out, "output CSV")->required();

  auto* eval = app.add_subcommand("eval", "fidelity/utility battery on an original/synthetic pair");
  eval->add_option("--data", opt.data, "original CSV")->required();
  eval->add_option("--synthetic", opt.synthetic, "synthetic CSV")->required();
  eval->add_option("--schema", opt.schema, "schema JSON")->required();
  eval->add_option("--report", opt.report, "report output path")->required();
  eval->add_option("--seed", opt.seed, "evaluation seed")->required();
  eval->add_option("--target", opt.target, "label column for utility/regression metrics");
  eval->add_flag("--no-utility", opt.no_utility, "skip classifier utility");

  auto* attack = app.add_subcommand("attack", "membership or attribute inference attack");
  attack->add_option("--mode", opt.mode, "mia or aia")->required();
  attack->add_option("--data", opt.data, "population (mia) or original (aia) CSV")->required();
  attack->add_option("--schema", opt.schema, "schema JSON")->required();
  attack->add_option("--rules", opt.rules, "rule file (mia)");
  attack->add_option("--synthetic", opt.synthetic, "synthetic CSV (aia)");
  attack->add_option("--sensitive", opt.sensitive, "sensitive column (aia)");
  attack->add_option("--report", opt.report, "report output path");
  attack->add_option("--seed", opt.seed, "attack seed")->required();
  attack->add_option("--members", opt.member_size, "member set size (mia)");
  attack->add_option("--shadows", opt.shadow_count, "shadow model count (mia)");
  add_train_flags(attack, opt);

  auto* accountant = app.add_subcommand("accountant", "standalone (q, sigma, steps, delta) -> epsilon");
  accountant->add_option("--q", opt.q, "sampling rate")->required();
  accountant->add_option("--sigma", opt.sigma, "noise multiplier")->required();
  accountant->add_option("--steps", opt.steps, "composed steps")->required();
  accountant->add_option("--delta", opt.delta, "delta")->required();

  auto* fixture = app.add_subcommand("fixture", "generate the built-in rule-consistent fixture");
  fixture->add_option("--name", opt.fixture_name, "fixture name (mini_network)");
  fixture->add_option("--rows", opt.rows, "rows to generate")->required();
  fixture->add_option("--seed", opt.seed, "generation seed")->required();
  fixture->add_option("--out", opt.out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(kipps::Errc::config);
  }

  try {
    if (fit->parsed()) {
      finalize_training_config(opt, [&] {
        // cheap row count for the default sampling rate
        std::ifstream in(opt.data);
        std::size_t lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        return lines > 0 ? lines - 1 : 0;
      }());
      kipps::FitArgs args{opt.data, opt.schema, opt.rules, opt.model, opt.config};
      return kipps::cmd_fit(args);
    }
    if (sample->parsed()) {
      kipps::cmd_sample(opt.model, opt.rows, opt.seed, opt.out);
      return 0;
    }
    if (eval->parsed()) {
      kipps::EvaluateArgs args;
      args.data_path = opt.data;
      args.synthetic_path = opt.synthetic;
      args.schema_path = opt.schema;
      args.report_out = opt.report;
      args.utility = !opt.no_utility;
      args.seed = opt.seed;
      if (!opt.target.empty()) args.target = opt.target;
      kipps::cmd_evaluate(args);
      return 0;
    }
    if (attack->parsed()) {
      finalize_training_config(opt, 2 * opt.member_size);
      kipps::AttackArgs args;
      args.mode = opt.mode;
      args.data_path = opt.data;
      args.schema_path = opt.schema;
      args.rules_path = opt.rules;
      args.synthetic_path = opt.synthetic;
      args.report_out = opt.report;
      args.sensitive = opt.sensitive;
      args.member_size = opt.member_size;
      args.shadow_count = opt.shadow_count;
      args.config = opt.config;
      args.seed = opt.seed;
      kipps::cmd_attack(args);
      return 0;
    }
    if (accountant->parsed()) {
      kipps::cmd_accountant(opt.q, opt.sigma, opt.steps, opt.delta);
      return 0;
    }
    if (fixture->parsed()) {
      kipps::cmd_fixture(opt.fixture_name, opt.rows, opt.seed, opt.out);
      return 0;
    }
  } catch (const kipps::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(kipps::Errc::data);
  }
  return 0;
}
