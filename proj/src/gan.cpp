#include "kipps/gan.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "kipps/error.hpp"

namespace kipps {

void TrainingConfig::validate() const {
  if (epochs < 0) fail_config("train: epochs must be nonnegative");
  if (batch_size < 1) fail_config("train: batch size must be positive");
  if (n_critic < 1) fail_config("train: n_critic must be >= 1");
  if (lambda_gp < 0.0) fail_config("train: lambda must be nonnegative");
  if (rule_weight < 0.0) fail_config("train: rule weight must be nonnegative");
  if (!(gumbel_tau > 0.0)) fail_config("train: gumbel temperature must be positive");
  if (noise_dim < 1) fail_config("train: noise dim must be positive");
  if (dp) dp->validate();
}

namespace {

std::size_t categorical_width(const RowEncodingLayout& layout) {
  std::size_t w = 0;
  for (const auto& seg : layout.segments)
    if (seg.kind != SegmentKind::alpha) w += seg.width;
  return w;
}

bool segment_selectable(const Segment& seg) {
  return seg.kind == SegmentKind::discrete_onehot || seg.kind == SegmentKind::mask_onehot ||
         seg.kind == SegmentKind::rule_flag_onehot;
}

struct GenNodes {
  int sample = -1;  // rows x total_width
  int probs = -1;   // rows x cond_width (selectable segments, clean softmax)
};

// tanh heads on alpha slots, Gumbel-softmax heads on categorical segments.
GenNodes build_generator_nodes(Graph& g, const GeneratorNet& gen, const RowEncodingLayout& layout,
                               double tau, int z, int cond, int gumbel) {
  const int input = g.concat_cols({z, cond});
  const int raw = build_mlp(g, gen.spec, "gen", input);

  std::vector<int> pieces;
  std::vector<int> prob_pieces;
  std::size_t gumbel_off = 0;
  for (const auto& seg : layout.segments) {
    const int slice = g.slice_cols(raw, seg.offset, seg.width);
    if (seg.kind == SegmentKind::alpha) {
      pieces.push_back(g.tanh_(slice));
      continue;
    }
    const int gsl = g.slice_cols(gumbel, gumbel_off, seg.width);
    gumbel_off += seg.width;
    const int noisy = g.scale(g.add(slice, gsl), 1.0 / tau);
    pieces.push_back(g.segment_softmax(noisy, {{0, seg.width}}));
    if (segment_selectable(seg))
      prob_pieces.push_back(g.segment_softmax(slice, {{0, seg.width}}));
  }
  GenNodes out;
  out.sample = g.concat_cols(pieces);
  out.probs = g.concat_cols(prob_pieces);
  return out;
}

struct CriticLossNodes {
  int per_row = -1;       // R x 1
  int mean = -1;          // 1 x 1
  int penalty_rows = -1;  // R x 1, before lambda
};

// Inputs "real"/"fake"/"interp" are already concatenated with the cond
// columns; the penalty gradient is taken over the data columns only.
CriticLossNodes build_critic_loss_nodes(Graph& g, const CriticNet& crit, std::size_t data_width,
                                        double lambda, int real, int fake, int interp) {
  const int d_real = build_mlp(g, crit.spec, "crit", real);
  const int d_fake = build_mlp(g, crit.spec, "crit", fake);
  const int grad_x = build_mlp_input_gradient(g, crit.spec, "crit", interp);
  const int grad_data = g.slice_cols(grad_x, 0, data_width);
  CriticLossNodes out;
  out.penalty_rows = g.square(g.add_scalar(g.row_l2norm(grad_data), -1.0));
  out.per_row = g.add(g.sub(d_fake, d_real), g.scale(out.penalty_rows, lambda));
  out.mean = g.mean_all(out.per_row);
  return out;
}

Tensor sample_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

Tensor sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.data) v = rng.gumbel();
  return t;
}

Tensor concat_tensors(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out.at(r, a.cols() + c) = b.at(r, c);
  }
  return out;
}

Tensor interpolate_rows(const Tensor& real, const Tensor& fake, Rng& rng) {
  Tensor out(real.rows(), real.cols());
  for (std::size_t r = 0; r < real.rows(); ++r) {
    const double u = rng.uniform();
    for (std::size_t c = 0; c < real.cols(); ++c)
      out.at(r, c) = u * real.at(r, c) + (1.0 - u) * fake.at(r, c);
  }
  return out;
}

Tensor critic_scores(const CriticNet& crit, const Tensor& input_cat) {
  auto g = std::make_shared<Graph>();
  const int in = g->input("x", input_cat.rows(), input_cat.cols());
  const int out = build_mlp(*g, crit.spec, "crit", in);
  return forward(Expression{g, out}, crit.params, {{"x", input_cat}});
}

}  // namespace

GeneratorNet make_generator(const RowEncodingLayout& layout, const TrainingConfig& cfg, Rng& rng) {
  GeneratorNet gen;
  gen.noise_dim = cfg.noise_dim;
  gen.spec.input_dim = cfg.noise_dim + layout.cond_width;
  gen.spec.hidden = cfg.gen_hidden;
  gen.spec.output_dim = layout.total_width;
  gen.spec.activation = Activation::tanh_act;
  init_mlp_params(gen.params, "gen", gen.spec, rng);
  return gen;
}

CriticNet make_critic(const RowEncodingLayout& layout, const TrainingConfig& cfg, Rng& rng) {
  CriticNet crit;
  crit.spec.input_dim = layout.total_width + layout.cond_width;
  crit.spec.hidden = cfg.crit_hidden;
  crit.spec.output_dim = 1;
  crit.spec.activation = Activation::leaky_relu;
  init_mlp_params(crit.params, "crit", crit.spec, rng);
  return crit;
}

Tensor cond_to_onehot(const RowEncodingLayout& layout, const std::vector<CondVector>& conds) {
  Tensor out(conds.size(), layout.cond_width);
  for (std::size_t r = 0; r < conds.size(); ++r) out.at(r, conds[r].flat_index) = 1.0;
  return out;
}

Tensor generator_forward(const GeneratorNet& gen, const RowEncodingLayout& layout,
                         const Tensor& z, const Tensor& cond_onehot, double tau,
                         std::uint64_t seed, Tensor* probs_out) {
  if (z.rows() != cond_onehot.rows()) fail_data("generator_forward: batch mismatch");
  auto g = std::make_shared<Graph>();
  const std::size_t rows = z.rows();
  const int zi = g->input("z", rows, z.cols());
  const int ci = g->input("cond", rows, cond_onehot.cols());
  const int gi = g->input("gumbel", rows, categorical_width(layout));
  GenNodes nodes = build_generator_nodes(*g, gen, layout, tau, zi, ci, gi);

  Rng rng = Rng::substream(seed, "generator_gumbel");
  InputMap inputs{{"z", z},
                  {"cond", cond_onehot},
                  {"gumbel", sample_gumbel(rows, categorical_width(layout), rng)}};
  auto outs = forward_many(*g, {nodes.sample, nodes.probs}, ParamBindings{&gen.params}, inputs);
  if (probs_out) *probs_out = outs[1];
  return outs[0];
}

Tensor harden_encoded(const RowEncodingLayout& layout, const Tensor& soft) {
  Tensor out(soft.rows(), soft.cols());
  for (std::size_t r = 0; r < soft.rows(); ++r) {
    for (const auto& seg : layout.segments) {
      if (seg.kind == SegmentKind::alpha) {
        out.at(r, seg.offset) = std::clamp(soft.at(r, seg.offset), -1.0, 1.0);
        continue;
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < seg.width; ++c)
        if (soft.at(r, seg.offset + c) > soft.at(r, seg.offset + best)) best = c;
      out.at(r, seg.offset + best) = 1.0;
    }
  }
  return out;
}

double gradient_penalty(const CriticNet& crit, const RowEncodingLayout& layout,
                        const Tensor& real, const Tensor& fake, const Tensor& cond_onehot,
                        std::uint64_t seed) {
  if (!real.same_shape(fake)) fail_data("gradient_penalty: batch shapes differ");
  Rng rng = Rng::substream(seed, "gp_u");
  const Tensor interp = interpolate_rows(real, fake, rng);
  const Tensor interp_cat = concat_tensors(interp, cond_onehot);

  auto g = std::make_shared<Graph>();
  const int in = g->input("interp", interp_cat.rows(), interp_cat.cols());
  const int grad_x = build_mlp_input_gradient(*g, crit.spec, "crit", in);
  const int grad_data = g->slice_cols(grad_x, 0, layout.total_width);
  const int pen = g->mean_all(g->square(g->add_scalar(g->row_l2norm(grad_data), -1.0)));
  return forward(Expression{g, pen}, crit.params, {{"interp", interp_cat}}).at(0, 0);
}

double critic_loss(const CriticNet& crit, const RowEncodingLayout& layout, const Tensor& real,
                   const Tensor& fake, const Tensor& cond_onehot, double lambda,
                   std::uint64_t seed, std::vector<double>* per_example) {
  if (!real.same_shape(fake)) fail_data("critic_loss: batch shapes differ");
  Rng rng = Rng::substream(seed, "gp_u");
  const Tensor interp = interpolate_rows(real, fake, rng);

  auto g = std::make_shared<Graph>();
  const std::size_t rows = real.rows();
  const std::size_t width = real.cols() + cond_onehot.cols();
  const int ri = g->input("real", rows, width);
  const int fi = g->input("fake", rows, width);
  const int ii = g->input("interp", rows, width);
  CriticLossNodes nodes = build_critic_loss_nodes(*g, crit, layout.total_width, lambda, ri, fi, ii);

  InputMap inputs{{"real", concat_tensors(real, cond_onehot)},
                  {"fake", concat_tensors(fake, cond_onehot)},
                  {"interp", concat_tensors(interp, cond_onehot)}};
  auto outs = forward_many(*g, {nodes.mean, nodes.per_row}, ParamBindings{&crit.params}, inputs);
  if (per_example) per_example->assign(outs[1].data.begin(), outs[1].data.end());
  return outs[0].at(0, 0);
}

Tensor build_rule_targets(const RowEncodingLayout& layout, const RuleSet& rules,
                          const TableSchema& masked_schema,
                          const std::vector<CondVector>& conds) {
  Tensor targets(conds.size(), layout.cond_width);
  for (std::size_t r = 0; r < conds.size(); ++r) {
    const EnforcedAssignment assignment =
        kg_query(cond_selection(layout, conds[r]), rules, masked_schema);
    for (const auto& t : assignment.targets) {
      const int sel = layout.selectable_for_source(t.segment);
      if (sel < 0) fail_data("rule target '" + t.segment + "' is not a selectable segment");
      targets.at(r, layout.cond_offsets[static_cast<std::size_t>(sel)] +
                        static_cast<std::size_t>(t.category)) = 1.0;
    }
  }
  return targets;
}

double generator_loss(const CriticNet& crit, const RowEncodingLayout& layout, const Tensor& fake,
                      const Tensor& probs, const std::vector<CondVector>& conds,
                      const RuleSet& rules, const TableSchema& masked_schema, double w_rule) {
  const Tensor cond_onehot = cond_to_onehot(layout, conds);
  const Tensor scores = critic_scores(crit, concat_tensors(fake, cond_onehot));
  double mean_d = 0.0;
  for (double v : scores.data) mean_d += v;
  mean_d /= static_cast<double>(scores.size());

  const Tensor targets = build_rule_targets(layout, rules, masked_schema, conds);
  double ce = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r)
    for (std::size_t c = 0; c < probs.cols(); ++c)
      if (targets.at(r, c) > 0.0) ce += -std::log(probs.at(r, c) + 1e-12);
  ce /= static_cast<double>(probs.rows());
  return -mean_d + w_rule * ce;
}

GeneratorLossGraph build_generator_loss_graph(const GeneratorNet& gen, const CriticNet& crit,
                                              const RowEncodingLayout& layout,
                                              const Tensor& rule_targets, double tau,
                                              double w_rule, std::size_t batch) {
  GeneratorLossGraph out;
  out.graph = std::make_shared<Graph>();
  Graph& g = *out.graph;
  const int zi = g.input("z", batch, gen.noise_dim);
  const int ci = g.input("cond", batch, layout.cond_width);
  const int gi = g.input("gumbel", batch, categorical_width(layout));
  GenNodes nodes = build_generator_nodes(g, gen, layout, tau, zi, ci, gi);
  const int fake_cat = g.concat_cols({nodes.sample, ci});
  const int d_fake = build_mlp(g, crit.spec, "crit", fake_cat);
  const int ce_rows =
      g.row_sum(g.mul(g.neg(g.log_(g.add_scalar(nodes.probs, 1e-12))), g.constant(rule_targets)));
  out.ce_mean = g.mean_all(ce_rows);
  out.loss = g.add(g.neg(g.mean_all(d_fake)), g.scale(out.ce_mean, w_rule));
  return out;
}

namespace {

struct TrainContext {
  const Tensor& encoded;
  const CondSampler& sampler;
  const RowEncodingLayout& layout;
  const TableSchema& masked_schema;
  const RuleSet& rules;
  const TrainingConfig& cfg;
  AdamConfig adam;
  std::size_t cat_width = 0;
};

Tensor gather_rows(const Tensor& encoded, const std::vector<std::size_t>& rows) {
  Tensor out(rows.size(), encoded.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < encoded.cols(); ++c) out.at(i, c) = encoded.at(rows[i], c);
  return out;
}

// One critic update; returns the batch loss, or nullopt when the Poisson
// batch came up empty.
std::optional<double> critic_update(TrainContext& ctx, TrainState& st, std::uint64_t ctr) {
  const std::uint64_t seed = ctx.cfg.seed;
  std::vector<CondVector> conds;
  std::vector<std::size_t> row_ids;

  if (st.dp_enabled) {
    Rng poisson = Rng::substream(seed, "dp_poisson", ctr);
    for (std::size_t r = 0; r < ctx.encoded.rows(); ++r)
      if (poisson.uniform() < ctx.cfg.dp->sampling_rate) row_ids.push_back(r);
    if (row_ids.empty()) return std::nullopt;
    Rng cond_rng = Rng::substream(seed, "dp_cond", ctr);
    for (std::size_t r : row_ids) {
      std::span<const double> row(ctx.encoded.data.data() + r * ctx.encoded.cols(),
                                  ctx.encoded.cols());
      conds.push_back(ctx.sampler.cond_from_encoded_row(ctx.layout, row, cond_rng));
    }
  } else {
    Rng cond_rng = Rng::substream(seed, "critic_cond", ctr);
    for (std::size_t i = 0; i < ctx.cfg.batch_size; ++i) {
      auto [cv, row] = ctx.sampler.sample_with_row(ctx.layout, cond_rng);
      conds.push_back(cv);
      row_ids.push_back(row);
    }
  }

  const std::size_t rows = row_ids.size();
  const Tensor real = gather_rows(ctx.encoded, row_ids);
  const Tensor cond_onehot = cond_to_onehot(ctx.layout, conds);

  Rng z_rng = Rng::substream(seed, "critic_z", ctr);
  Rng g_rng = Rng::substream(seed, "critic_gumbel", ctr);
  const Tensor z = sample_normal(rows, st.gen.noise_dim, z_rng);
  const Tensor gumbel = sample_gumbel(rows, ctx.cat_width, g_rng);

  // fake batch, detached from the generator
  Tensor fake;
  {
    auto g = std::make_shared<Graph>();
    const int zi = g->input("z", rows, st.gen.noise_dim);
    const int ci = g->input("cond", rows, ctx.layout.cond_width);
    const int gi = g->input("gumbel", rows, ctx.cat_width);
    GenNodes nodes = build_generator_nodes(*g, st.gen, ctx.layout, ctx.cfg.gumbel_tau, zi, ci, gi);
    fake = forward(Expression{g, nodes.sample}, st.gen.params,
                   {{"z", z}, {"cond", cond_onehot}, {"gumbel", gumbel}});
  }

  Rng u_rng = Rng::substream(seed, "gp_u", ctr);
  const Tensor interp = interpolate_rows(real, fake, u_rng);

  auto g = std::make_shared<Graph>();
  const std::size_t width = ctx.layout.total_width + ctx.layout.cond_width;
  const int ri = g->input("real", rows, width);
  const int fi = g->input("fake", rows, width);
  const int ii = g->input("interp", rows, width);
  CriticLossNodes nodes =
      build_critic_loss_nodes(*g, st.crit, ctx.layout.total_width, ctx.cfg.lambda_gp, ri, fi, ii);
  InputMap inputs{{"real", concat_tensors(real, cond_onehot)},
                  {"fake", concat_tensors(fake, cond_onehot)},
                  {"interp", concat_tensors(interp, cond_onehot)}};

  if (!st.dp_enabled) {
    double value = 0.0;
    GradMap grads = grad(Expression{g, nodes.mean}, st.crit.params, inputs, nullptr, &value);
    adam_step(st.crit.params, grads, st.crit_opt, ctx.adam);
    return value;
  }

  const DpConfig& dp = *ctx.cfg.dp;
  std::vector<double> losses;
  auto per_row = per_example_grads(Expression{g, nodes.per_row}, st.crit.params, inputs, &losses);
  std::vector<std::vector<double>> clipped;
  clipped.reserve(per_row.size());
  for (auto& gvec : per_row) {
    clipped.push_back(clip_per_example(gvec, dp.clip_norm).vector);
    if (l2_norm(clipped.back()) > dp.clip_norm * (1.0 + 1e-9))
      fail_data("dp invariant violated: clipped gradient norm exceeds C");
  }
  const auto noisy = aggregate_noisy(clipped, dp.clip_norm, dp.noise_multiplier,
                                     Rng::derive(seed, "dp_noise", ctr));
  adam_step_flat(st.crit.params, noisy, st.crit_opt, ctx.adam);

  double mean_loss = 0.0;
  for (double v : losses) mean_loss += v;
  return mean_loss / static_cast<double>(losses.size());
}

std::pair<double, double> generator_update(TrainContext& ctx, TrainState& st, std::uint64_t ctr) {
  const std::uint64_t seed = ctx.cfg.seed;
  Rng cond_rng = Rng::substream(seed, "gen_cond", ctr);
  std::vector<CondVector> conds;
  conds.reserve(ctx.cfg.batch_size);
  for (std::size_t i = 0; i < ctx.cfg.batch_size; ++i)
    conds.push_back(ctx.sampler.sample(ctx.layout, cond_rng));
  const std::size_t rows = conds.size();

  Rng z_rng = Rng::substream(seed, "gen_z", ctr);
  Rng g_rng = Rng::substream(seed, "gen_gumbel", ctr);
  const Tensor z = sample_normal(rows, st.gen.noise_dim, z_rng);
  const Tensor gumbel = sample_gumbel(rows, ctx.cat_width, g_rng);
  const Tensor cond_onehot = cond_to_onehot(ctx.layout, conds);
  const Tensor targets = build_rule_targets(ctx.layout, ctx.rules, ctx.masked_schema, conds);
  GeneratorLossGraph glg = build_generator_loss_graph(st.gen, st.crit, ctx.layout, targets,
                                                      ctx.cfg.gumbel_tau, ctx.cfg.rule_weight,
                                                      rows);

  InputMap inputs{{"z", z}, {"cond", cond_onehot}, {"gumbel", gumbel}};
  ParamBindings bindings{&st.gen.params, &st.crit.params};
  double value = 0.0;
  GradMap grads = grad(glg.loss_expr(), bindings, inputs, nullptr, &value);
  adam_step(st.gen.params, grads, st.gen_opt, ctx.adam);

  const Tensor ce = forward_many(*glg.graph, {glg.ce_mean}, bindings, inputs)[0];
  return {value, ce.at(0, 0)};
}

}  // namespace

TrainState train(const Tensor& encoded, const CondSampler& sampler,
                 const RowEncodingLayout& layout, const TableSchema& masked_schema,
                 const RuleSet& rules, const TrainingConfig& cfg) {
  cfg.validate();
  if (encoded.cols() != layout.total_width) fail_data("train: encoded width mismatch");
  if (encoded.rows() == 0) fail_data("train: empty table");

  TrainState st;
  Rng init = Rng::substream(cfg.seed, "init");
  st.gen = make_generator(layout, cfg, init);
  st.crit = make_critic(layout, cfg, init);
  st.dp_enabled = cfg.dp.has_value();
  st.accountant = make_accountant();

  TrainContext ctx{encoded, sampler, layout, masked_schema, rules, cfg,
                   AdamConfig{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, 1e-8},
                   categorical_width(layout)};

  const std::size_t steps_per_epoch = std::max<std::size_t>(1, encoded.rows() / cfg.batch_size);
  std::uint64_t ctr = 0;
  for (int epoch = 0; epoch < cfg.epochs && !st.budget_exhausted; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch && !st.budget_exhausted; ++s) {
      double critic_acc = 0.0;
      int critic_n = 0;
      for (int c = 0; c < cfg.n_critic; ++c) {
        ++ctr;
        auto loss = critic_update(ctx, st, ctr);
        if (loss) {
          critic_acc += *loss;
          ++critic_n;
        }
        if (st.dp_enabled) {
          account_step(st.accountant, cfg.dp->sampling_rate, cfg.dp->noise_multiplier);
          if (cfg.dp->epsilon_ceiling &&
              report_epsilon(st.accountant, cfg.dp->delta).epsilon > *cfg.dp->epsilon_ceiling) {
            st.budget_exhausted = true;
            break;
          }
        }
      }
      if (st.budget_exhausted) break;
      ++ctr;
      auto [gen_loss, ce] = generator_update(ctx, st, ctr);
      st.history.push_back({critic_n ? critic_acc / critic_n : 0.0, gen_loss, ce});
      st.steps_done++;
    }
    if (!st.budget_exhausted) st.epochs_done++;
  }
  return st;
}

Synthesizer fit_synthesizer(const DataTable& original, RuleSet rules, const TrainingConfig& cfg) {
  cfg.validate();
  {
    ValidationReport rep = validate_ruleset(rules, original.schema);
    if (!rep.ok()) fail_data("ruleset invalid:\n" + rep.to_string());
  }
  Synthesizer model;
  model.original_schema = original.schema;
  const DataTable masked = apply_property_masks(original, rules);
  model.rules = std::move(rules);
  model.masked_schema = masked.schema;
  model.encodings = fit_table_encodings(masked, cfg.gmm_max_modes, cfg.gmm_weight_threshold,
                                        Rng::derive(cfg.seed, "gmm"));
  model.layout = build_layout(masked.schema, model.encodings, model.rules);
  const Tensor encoded =
      encode_table(masked, model.layout, model.encodings, model.rules, Rng::derive(cfg.seed, "encode"));
  const CondSampler sampler = CondSampler::build(masked, model.rules, model.layout);
  model.cond_counts = sampler.counts();
  model.config = cfg;
  model.state = train(encoded, sampler, model.layout, masked.schema, model.rules, cfg);
  return model;
}

DataTable sample_synthetic(const Synthesizer& model, std::size_t n, std::uint64_t seed) {
  DataTable out;
  out.schema = model.original_schema;
  for (auto& col : out.schema.columns) {
    if (col.kind == ColumnKind::discrete && !col.categories_closed) col.categories.clear();
  }
  if (n == 0) return out;

  const CondSampler sampler = CondSampler::from_counts(model.layout, model.cond_counts);
  Rng cond_rng = Rng::substream(seed, "sample_cond");
  Rng z_rng = Rng::substream(seed, "sample_z");

  std::size_t produced = 0;
  std::uint64_t chunk_id = 0;
  while (produced < n) {
    const std::size_t rows = std::min<std::size_t>(512, n - produced);
    std::vector<CondVector> conds;
    conds.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) conds.push_back(sampler.sample(model.layout, cond_rng));
    const Tensor cond_onehot = cond_to_onehot(model.layout, conds);
    const Tensor z = sample_normal(rows, model.state.gen.noise_dim, z_rng);
    Tensor probs;
    Tensor soft = generator_forward(model.state.gen, model.layout, z, cond_onehot,
                                    model.config.gumbel_tau,
                                    Rng::derive(seed, "sample_gumbel", chunk_id), &probs);
    Tensor hard = harden_encoded(model.layout, soft);
    // selectable segments harden from the clean category distribution, so
    // row randomness flows through z and cond rather than per-segment noise
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < model.layout.selectable.size(); ++i) {
        const Segment& seg = model.layout.segments[model.layout.selectable[i]];
        const std::size_t probs_off = model.layout.cond_offsets[i];
        std::size_t best = 0;
        for (std::size_t c = 1; c < seg.width; ++c)
          if (probs.at(r, probs_off + c) > probs.at(r, probs_off + best)) best = c;
        for (std::size_t c = 0; c < seg.width; ++c)
          hard.at(r, seg.offset + c) = c == best ? 1.0 : 0.0;
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      std::span<const double> row(hard.data.data() + r * hard.cols(), hard.cols());
      auto cells = decode_row(row, model.masked_schema, model.layout, model.encodings, model.rules,
                              model.original_schema, Rng::derive(seed, "decode", produced + r));
      out.append_text_row(cells);
    }
    produced += rows;
    ++chunk_id;
  }
  out.check_invariants();
  return out;
}

}  // namespace kipps
