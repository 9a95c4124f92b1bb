#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kipps/autodiff.hpp"
#include "kipps/dp.hpp"
#include "kipps/encoder.hpp"
#include "kipps/rules.hpp"
#include "kipps/schema.hpp"
#include "kipps/tensor.hpp"

namespace kipps {

struct TrainingConfig {
  int epochs = 30;
  std::size_t batch_size = 64;  // L
  int n_critic = 5;
  double lambda_gp = 10.0;
  double rule_weight = 10.0;  // w_rule
  double gumbel_tau = 0.2;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  std::size_t noise_dim = 128;
  std::vector<std::size_t> gen_hidden{256, 256};
  std::vector<std::size_t> crit_hidden{256, 256};
  std::size_t gmm_max_modes = 10;
  double gmm_weight_threshold = 0.005;
  std::uint64_t seed = 0;
  std::optional<DpConfig> dp;

  void validate() const;
};

struct GeneratorNet {
  ParamSet params;
  MlpSpec spec;  // input = noise + cond, output = layout total width
  std::size_t noise_dim = 0;
};

struct CriticNet {
  ParamSet params;
  MlpSpec spec;  // input = layout total width + cond width, scalar output
};

struct LossRecord {
  double critic = 0.0;
  double generator = 0.0;
  double rule_ce = 0.0;
};

struct TrainState {
  GeneratorNet gen;
  CriticNet crit;
  AdamState gen_opt, crit_opt;
  std::int64_t epochs_done = 0;
  std::int64_t steps_done = 0;
  bool dp_enabled = false;
  bool budget_exhausted = false;
  AccountantState accountant;
  std::vector<LossRecord> history;  // one record per optimization step
};

GeneratorNet make_generator(const RowEncodingLayout& layout, const TrainingConfig& cfg, Rng& rng);
CriticNet make_critic(const RowEncodingLayout& layout, const TrainingConfig& cfg, Rng& rng);

// Soft encoded batch: tanh on alpha slots, Gumbel-softmax at temperature tau
// on every categorical segment. `probs_out`, when given, receives the clean
// softmax probabilities of the selectable segments (cond-width columns).
Tensor generator_forward(const GeneratorNet& gen, const RowEncodingLayout& layout,
                         const Tensor& z, const Tensor& cond_onehot, double tau,
                         std::uint64_t seed, Tensor* probs_out = nullptr);

// Hard one-hots per categorical segment, alpha slots passed through.
Tensor harden_encoded(const RowEncodingLayout& layout, const Tensor& soft);

Tensor cond_to_onehot(const RowEncodingLayout& layout, const std::vector<CondVector>& conds);

// mean over the batch of (|grad_x D(interp ++ cond)|_2 - 1)^2, the gradient
// taken over the data columns only; interpolation weights are seeded.
double gradient_penalty(const CriticNet& crit, const RowEncodingLayout& layout,
                        const Tensor& real, const Tensor& fake, const Tensor& cond_onehot,
                        std::uint64_t seed);

// E[D(fake)] - E[D(real)] + lambda * penalty
double critic_loss(const CriticNet& crit, const RowEncodingLayout& layout, const Tensor& real,
                   const Tensor& fake, const Tensor& cond_onehot, double lambda,
                   std::uint64_t seed, std::vector<double>* per_example = nullptr);

// -mean(D(fake ++ cond)) + w_rule * mean over rows of the enforced-target
// cross entropy sum_(seg,j*) -log p_seg[j*], targets from kg_query.
double generator_loss(const CriticNet& crit, const RowEncodingLayout& layout, const Tensor& fake,
                      const Tensor& probs, const std::vector<CondVector>& conds,
                      const RuleSet& rules, const TableSchema& masked_schema, double w_rule);

// 0/1 matrix (rows x cond_width) of enforced one-hot targets per row.
Tensor build_rule_targets(const RowEncodingLayout& layout, const RuleSet& rules,
                          const TableSchema& masked_schema,
                          const std::vector<CondVector>& conds);

// The generator update expression: inputs "z", "cond", "gumbel" only (the
// generator never sees real rows, which keeps the DP story confined to the
// critic). `ce_mean` is the rule cross-entropy term before weighting.
struct GeneratorLossGraph {
  std::shared_ptr<Graph> graph;
  int loss = -1;
  int ce_mean = -1;
  Expression loss_expr() const { return Expression{graph, loss}; }
};

GeneratorLossGraph build_generator_loss_graph(const GeneratorNet& gen, const CriticNet& crit,
                                              const RowEncodingLayout& layout,
                                              const Tensor& rule_targets, double tau,
                                              double w_rule, std::size_t batch);

TrainState train(const Tensor& encoded, const CondSampler& sampler,
                 const RowEncodingLayout& layout, const TableSchema& masked_schema,
                 const RuleSet& rules, const TrainingConfig& cfg);

// Everything a fitted model needs to sample and to be persisted.
struct Synthesizer {
  TableSchema original_schema;
  TableSchema masked_schema;
  RuleSet rules;  // carries observed catch-all members
  std::vector<ContinuousEncoding> encodings;
  RowEncodingLayout layout;
  std::vector<std::vector<std::int64_t>> cond_counts;
  TrainingConfig config;
  TrainState state;
};

Synthesizer fit_synthesizer(const DataTable& original, RuleSet rules, const TrainingConfig& cfg);
DataTable sample_synthetic(const Synthesizer& model, std::size_t n, std::uint64_t seed);

}  // namespace kipps
