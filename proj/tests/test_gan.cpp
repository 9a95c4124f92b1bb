#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "kipps/error.hpp"
#include "kipps/gan.hpp"

using namespace kipps;

namespace {

// protocol / dst_port(masked) / bytes with one rule, tiny nets
struct Fixture {
  TableSchema schema;
  RuleSet rules;
  DataTable original;
  DataTable masked;
  std::vector<ContinuousEncoding> encodings;
  RowEncodingLayout layout;
  TrainingConfig cfg;
  Tensor encoded;
  CondSampler sampler;

  Fixture() : sampler(make()) {}

  CondSampler make() {
    ColumnSpec protocol{"protocol", ColumnKind::discrete, {"DNS", "HTTP"}, true, {}};
    ColumnSpec port{"dst_port", ColumnKind::discrete, {"53", "80"}, true, {}};
    ColumnSpec bytes{"bytes", ColumnKind::continuous, {}, false, {}};
    schema.columns = {protocol, port, bytes};

    PropertyMap pm;
    pm.name = "port_group";
    pm.source_column = "dst_port";
    pm.groups = {GroupDef{"p53", GroupMembership::values, {"53"}, 0, 0, ""},
                 GroupDef{"web", GroupMembership::values, {"80"}, 0, 0, ""}};
    Rule r1;
    r1.id = "r1";
    r1.antecedent = {{"protocol", "DNS"}};
    r1.consequent = {{"port_group", "p53"}};
    rules.rules = {r1};
    rules.property_maps = {pm};

    original.schema = schema;
    Rng rng(17);
    for (int i = 0; i < 120; ++i) {
      const bool dns = rng.uniform() < 0.5;
      Row row(3);
      row[0] = Cell::discrete(dns ? 0 : 1);
      row[1] = Cell::discrete(dns ? 0 : 1);
      row[2] = Cell::continuous(rng.normal(dns ? 100.0 : 1000.0, 20.0));
      original.rows.push_back(row);
    }
    masked = apply_property_masks(original, rules);
    encodings = fit_table_encodings(masked, 5, 0.005, 3);
    layout = build_layout(masked.schema, encodings, rules);
    encoded = encode_table(masked, layout, encodings, rules, 5);

    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.n_critic = 2;
    cfg.noise_dim = 8;
    cfg.gen_hidden = {16};
    cfg.crit_hidden = {16};
    cfg.seed = 11;
    return CondSampler::build(masked, rules, layout);
  }
};

std::vector<CondVector> fixed_conds(const RowEncodingLayout& layout, std::size_t n) {
  std::vector<CondVector> conds;
  Rng rng(4);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t seg = rng.uniform_index(layout.selectable.size());
    const std::size_t width = layout.segments[layout.selectable[seg]].width;
    conds.push_back(make_cond(layout, seg, static_cast<std::int32_t>(rng.uniform_index(width))));
  }
  return conds;
}

}  // namespace

TEST_CASE("generator output segments are valid simplices at any temperature") {
  Fixture f;
  Rng rng(2);
  GeneratorNet gen = make_generator(f.layout, f.cfg, rng);
  for (double tau : {0.1, 0.2, 1.0, 5.0}) {
    auto conds = fixed_conds(f.layout, 6);
    Tensor z(6, f.cfg.noise_dim);
    Rng zr(9);
    for (auto& v : z.data) v = zr.normal();
    Tensor probs;
    Tensor soft = generator_forward(gen, f.layout, z, cond_to_onehot(f.layout, conds), tau, 31,
                                    &probs);
    for (std::size_t r = 0; r < 6; ++r) {
      for (const auto& seg : f.layout.segments) {
        if (seg.kind == SegmentKind::alpha) {
          CHECK(soft.at(r, seg.offset) > -1.0);
          CHECK(soft.at(r, seg.offset) < 1.0);
          continue;
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < seg.width; ++c) sum += soft.at(r, seg.offset + c);
        CHECK(std::abs(sum - 1.0) <= 1e-6);
      }
      double psum_first = 0.0;
      for (std::size_t c = 0; c < f.layout.segments[f.layout.selectable[0]].width; ++c)
        psum_first += probs.at(r, c);
      CHECK(std::abs(psum_first - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("tau -> 0 gives one-hot argmax samples; same seed reproduces bit-identically") {
  Fixture f;
  Rng rng(2);
  GeneratorNet gen = make_generator(f.layout, f.cfg, rng);
  auto conds = fixed_conds(f.layout, 4);
  Tensor z(4, f.cfg.noise_dim);
  Rng zr(9);
  for (auto& v : z.data) v = zr.normal();
  const Tensor cond = cond_to_onehot(f.layout, conds);

  Tensor cold = generator_forward(gen, f.layout, z, cond, 1e-6, 31);
  for (std::size_t r = 0; r < 4; ++r) {
    for (const auto& seg : f.layout.segments) {
      if (seg.kind == SegmentKind::alpha) continue;
      double mx = 0.0;
      int ones = 0;
      for (std::size_t c = 0; c < seg.width; ++c) {
        mx = std::max(mx, cold.at(r, seg.offset + c));
        if (cold.at(r, seg.offset + c) > 0.999) ++ones;
      }
      CHECK(mx > 0.999);
      CHECK(ones == 1);
    }
  }

  Tensor a = generator_forward(gen, f.layout, z, cond, 0.2, 31);
  Tensor b = generator_forward(gen, f.layout, z, cond, 0.2, 31);
  CHECK(a.data == b.data);
  Tensor c = generator_forward(gen, f.layout, z, cond, 0.2, 32);
  CHECK(a.data != c.data);
}

TEST_CASE("harden_encoded produces exact one-hots") {
  Fixture f;
  Rng rng(2);
  GeneratorNet gen = make_generator(f.layout, f.cfg, rng);
  auto conds = fixed_conds(f.layout, 5);
  Tensor z(5, f.cfg.noise_dim);
  Rng zr(10);
  for (auto& v : z.data) v = zr.normal();
  Tensor soft = generator_forward(gen, f.layout, z, cond_to_onehot(f.layout, conds), 0.7, 3);
  Tensor hard = harden_encoded(f.layout, soft);
  for (std::size_t r = 0; r < 5; ++r) {
    for (const auto& seg : f.layout.segments) {
      if (seg.kind == SegmentKind::alpha) continue;
      double sum = 0.0;
      for (std::size_t c = 0; c < seg.width; ++c) {
        const double v = hard.at(r, seg.offset + c);
        CHECK((v == 0.0 || v == 1.0));
        sum += v;
      }
      CHECK(sum == 1.0);
    }
  }
}

TEST_CASE("gradient penalty: linear critic closed forms") {
  Fixture f;
  TrainingConfig cfg = f.cfg;
  cfg.crit_hidden = {};  // linear critic
  Rng rng(5);
  CriticNet crit = make_critic(f.layout, cfg, rng);

  // weight vector: data slots scaled to norm 1, cond slots zero
  Tensor& w = crit.params.at("crit.W1");
  for (auto& v : w.data) v = 0.0;
  for (std::size_t i = 0; i < f.layout.total_width; ++i) w.at(i, 0) = 1.0;
  const double norm1 = std::sqrt(static_cast<double>(f.layout.total_width));
  for (std::size_t i = 0; i < f.layout.total_width; ++i) w.at(i, 0) /= norm1;

  auto conds = fixed_conds(f.layout, 8);
  Tensor real(8, f.layout.total_width), fake(8, f.layout.total_width);
  Rng xr(6);
  for (auto& v : real.data) v = xr.normal();
  for (auto& v : fake.data) v = xr.normal();
  const Tensor cond = cond_to_onehot(f.layout, conds);

  CHECK(gradient_penalty(crit, f.layout, real, fake, cond, 7) == doctest::Approx(0.0).epsilon(1e-10));

  // norm 3: penalty (3-1)^2 = 4; caller applying lambda=10 contributes 40
  for (std::size_t i = 0; i < f.layout.total_width; ++i) w.at(i, 0) *= 3.0;
  const double pen = gradient_penalty(crit, f.layout, real, fake, cond, 7);
  CHECK(std::abs(pen - 4.0) <= 1e-10);
  CHECK(std::abs(10.0 * pen - 40.0) <= 1e-9);
}

TEST_CASE("gradient penalty matches a finite-difference evaluation of |grad D|") {
  Fixture f;
  Rng rng(5);
  CriticNet crit = make_critic(f.layout, f.cfg, rng);
  const std::size_t width = f.layout.total_width;
  auto conds = fixed_conds(f.layout, 3);
  const Tensor cond = cond_to_onehot(f.layout, conds);
  Tensor real(3, width), fake(3, width);
  Rng xr(8);
  for (auto& v : real.data) v = xr.normal() + 0.05;
  for (auto& v : fake.data) v = xr.normal() - 0.05;

  // reproduce the interpolation the implementation draws for this seed
  Rng ur = Rng::substream(123, "gp_u");
  Tensor interp(3, width);
  for (std::size_t r = 0; r < 3; ++r) {
    const double u = ur.uniform();
    for (std::size_t c = 0; c < width; ++c)
      interp.at(r, c) = u * real.at(r, c) + (1.0 - u) * fake.at(r, c);
  }

  // finite-difference |grad_x D| per row over the data columns
  auto d_of = [&](const Tensor& x) {
    auto g = std::make_shared<Graph>();
    int in = g->input("x", x.rows(), x.cols());
    int out = build_mlp(*g, crit.spec, "crit", in);
    return forward(Expression{g, out}, crit.params, {{"x", x}});
  };
  Tensor interp_cat(3, width + f.layout.cond_width);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < width; ++c) interp_cat.at(r, c) = interp.at(r, c);
    for (std::size_t c = 0; c < f.layout.cond_width; ++c)
      interp_cat.at(r, width + c) = cond.at(r, c);
  }
  double fd_penalty = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      Tensor up = interp_cat, down = interp_cat;
      up.at(r, c) += 1e-5;
      down.at(r, c) -= 1e-5;
      const double fd = (d_of(up).at(r, 0) - d_of(down).at(r, 0)) / 2e-5;
      norm_sq += fd * fd;
    }
    const double n = std::sqrt(norm_sq);
    fd_penalty += (n - 1.0) * (n - 1.0);
  }
  fd_penalty /= 3.0;

  const double pen = gradient_penalty(crit, f.layout, real, fake, cond, 123);
  CHECK(std::abs(pen - fd_penalty) / std::max({pen, fd_penalty, 1e-8}) <= 1e-4);
}

TEST_CASE("critic loss: cancellation, lambda scaling, per-example decomposition") {
  Fixture f;
  TrainingConfig cfg = f.cfg;
  cfg.crit_hidden = {};
  Rng rng(5);
  CriticNet crit = make_critic(f.layout, cfg, rng);
  Tensor& w = crit.params.at("crit.W1");
  for (auto& v : w.data) v = 0.0;
  for (std::size_t i = 0; i < f.layout.total_width; ++i)
    w.at(i, 0) = 1.0 / std::sqrt(static_cast<double>(f.layout.total_width));

  auto conds = fixed_conds(f.layout, 6);
  const Tensor cond = cond_to_onehot(f.layout, conds);
  Tensor real(6, f.layout.total_width);
  Rng xr(9);
  for (auto& v : real.data) v = xr.normal();

  // real == fake and |grad D| == 1: loss exactly 0
  CHECK(critic_loss(crit, f.layout, real, real, cond, 10.0, 3) ==
        doctest::Approx(0.0).epsilon(1e-12));

  Tensor fake(6, f.layout.total_width);
  for (auto& v : fake.data) v = xr.normal();
  const double w0 = critic_loss(crit, f.layout, real, fake, cond, 0.0, 3);
  const double w10 = critic_loss(crit, f.layout, real, fake, cond, 10.0, 3);
  const double w20 = critic_loss(crit, f.layout, real, fake, cond, 20.0, 3);
  const double pen = gradient_penalty(crit, f.layout, real, fake, cond, 3);
  CHECK(w10 == doctest::Approx(w0 + 10.0 * pen).epsilon(1e-12));
  CHECK(w20 - w10 == doctest::Approx(w10 - w0).epsilon(1e-10));

  std::vector<double> per;
  const double mean = critic_loss(crit, f.layout, real, fake, cond, 10.0, 3, &per);
  REQUIRE(per.size() == 6);
  double sum = 0.0;
  for (double v : per) sum += v;
  CHECK(std::abs(sum / 6.0 - mean) <= 1e-10);
}

TEST_CASE("critic scores are permutation equivariant") {
  Fixture f;
  Rng rng(5);
  CriticNet crit = make_critic(f.layout, f.cfg, rng);
  auto conds = fixed_conds(f.layout, 4);
  const Tensor cond = cond_to_onehot(f.layout, conds);
  Tensor real(4, f.layout.total_width), fake(4, f.layout.total_width);
  Rng xr(10);
  for (auto& v : real.data) v = xr.normal();
  for (auto& v : fake.data) v = xr.normal();

  std::vector<double> per;
  critic_loss(crit, f.layout, real, fake, cond, 5.0, 9, &per);

  // swap rows 0 and 3 everywhere (including the interpolation seed stream
  // is row-indexed, so rebuild with the same u draws swapped is not needed:
  // compare via the per-row D terms instead)
  auto d_of = [&](const Tensor& x, const Tensor& cnd) {
    Tensor cat(x.rows(), x.cols() + cnd.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) cat.at(r, c) = x.at(r, c);
      for (std::size_t c = 0; c < cnd.cols(); ++c) cat.at(r, x.cols() + c) = cnd.at(r, c);
    }
    auto g = std::make_shared<Graph>();
    int in = g->input("x", cat.rows(), cat.cols());
    int out = build_mlp(*g, crit.spec, "crit", in);
    return forward(Expression{g, out}, crit.params, {{"x", cat}});
  };
  Tensor scores = d_of(real, cond);
  Tensor permuted_real = real, permuted_cond = cond;
  for (std::size_t c = 0; c < real.cols(); ++c)
    std::swap(permuted_real.at(0, c), permuted_real.at(3, c));
  for (std::size_t c = 0; c < cond.cols(); ++c)
    std::swap(permuted_cond.at(0, c), permuted_cond.at(3, c));
  Tensor scores_p = d_of(permuted_real, permuted_cond);
  CHECK(scores.at(0, 0) == scores_p.at(3, 0));
  CHECK(scores.at(3, 0) == scores_p.at(0, 0));
  CHECK(scores.at(1, 0) == scores_p.at(1, 0));
}

TEST_CASE("build_rule_targets points at the kg_query assignments") {
  Fixture f;
  // cond: protocol = DNS -> targets protocol=DNS, port_group=p53, r1=1
  const int proto_sel = f.layout.selectable_for_source("protocol");
  REQUIRE(proto_sel >= 0);
  auto cv = make_cond(f.layout, static_cast<std::size_t>(proto_sel), 0);  // DNS
  Tensor targets = build_rule_targets(f.layout, f.rules, f.masked.schema, {cv});

  std::size_t expected_hits = 0;
  for (std::size_t i = 0; i < f.layout.selectable.size(); ++i) {
    const Segment& seg = f.layout.segments[f.layout.selectable[i]];
    for (std::size_t c = 0; c < seg.width; ++c) {
      const double v = targets.at(0, f.layout.cond_offsets[i] + c);
      if (v == 1.0) {
        ++expected_hits;
        if (seg.source == "protocol") CHECK(c == 0);
        if (seg.source == "port_group") CHECK(c == 0);  // p53
        if (seg.source == "r1") CHECK(c == 1);
      }
    }
  }
  CHECK(expected_hits == 3);
}

TEST_CASE("generator loss: enforced-target cross entropy identities") {
  Fixture f;
  Rng rng(5);
  CriticNet crit = make_critic(f.layout, f.cfg, rng);
  GeneratorNet gen = make_generator(f.layout, f.cfg, rng);

  const int proto_sel = f.layout.selectable_for_source("protocol");
  auto cv = make_cond(f.layout, static_cast<std::size_t>(proto_sel), 0);
  std::vector<CondVector> conds{cv, cv};

  Tensor z(2, f.cfg.noise_dim);
  Rng zr(3);
  for (auto& v : z.data) v = zr.normal();
  Tensor probs;
  Tensor fake = generator_forward(gen, f.layout, z, cond_to_onehot(f.layout, conds), 0.2, 5,
                                  &probs);

  // probability 1 on every enforced target -> cross entropy 0
  Tensor sure = probs;
  Tensor targets = build_rule_targets(f.layout, f.rules, f.masked.schema, conds);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t i = 0; i < f.layout.selectable.size(); ++i) {
      const Segment& seg = f.layout.segments[f.layout.selectable[i]];
      bool has_target = false;
      std::size_t target_c = 0;
      for (std::size_t c = 0; c < seg.width; ++c)
        if (targets.at(r, f.layout.cond_offsets[i] + c) == 1.0) {
          has_target = true;
          target_c = c;
        }
      for (std::size_t c = 0; c < seg.width; ++c)
        sure.at(r, f.layout.cond_offsets[i] + c) = has_target ? (c == target_c ? 1.0 : 0.0)
                                                              : sure.at(r, f.layout.cond_offsets[i] + c);
    }
  const double loss_sure =
      generator_loss(crit, f.layout, fake, sure, conds, f.rules, f.masked.schema, 10.0);
  const double loss_base =
      generator_loss(crit, f.layout, fake, sure, conds, f.rules, f.masked.schema, 0.0);
  CHECK(std::abs(loss_sure - loss_base) <= 1e-9);  // H = 0

  // a single enforced target carrying probability e^-1 contributes exactly 1
  Tensor one_target(2, f.layout.cond_width);
  const int r1_sel = f.layout.selectable_for_source("r1");
  std::vector<CondVector> neg_conds{make_cond(f.layout, static_cast<std::size_t>(r1_sel), 0),
                                    make_cond(f.layout, static_cast<std::size_t>(r1_sel), 0)};
  Tensor p2 = probs;
  const std::size_t r1_off = f.layout.cond_offsets[static_cast<std::size_t>(r1_sel)];
  for (std::size_t r = 0; r < 2; ++r) {
    p2.at(r, r1_off) = std::exp(-1.0);
    p2.at(r, r1_off + 1) = 1.0 - std::exp(-1.0);
  }
  const double with_rule =
      generator_loss(crit, f.layout, fake, p2, neg_conds, f.rules, f.masked.schema, 1.0);
  const double without_rule =
      generator_loss(crit, f.layout, fake, p2, neg_conds, f.rules, f.masked.schema, 0.0);
  CHECK(with_rule - without_rule == doctest::Approx(1.0).epsilon(1e-8));

  // w_rule = 0 reduces to -E[D]
  auto d_mean = [&]() {
    Tensor cat(2, f.layout.total_width + f.layout.cond_width);
    const Tensor cond = cond_to_onehot(f.layout, conds);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < f.layout.total_width; ++c) cat.at(r, c) = fake.at(r, c);
      for (std::size_t c = 0; c < f.layout.cond_width; ++c)
        cat.at(r, f.layout.total_width + c) = cond.at(r, c);
    }
    auto g = std::make_shared<Graph>();
    int in = g->input("x", 2, cat.cols());
    int out = g->mean_all(build_mlp(*g, crit.spec, "crit", in));
    return forward(Expression{g, out}, crit.params, {{"x", cat}}).at(0, 0);
  };
  CHECK(loss_base == doctest::Approx(-d_mean()).epsilon(1e-12));
}

TEST_CASE("generator loss expression never touches a real batch input") {
  Fixture f;
  Rng rng(5);
  GeneratorNet gen = make_generator(f.layout, f.cfg, rng);
  CriticNet crit = make_critic(f.layout, f.cfg, rng);
  auto conds = fixed_conds(f.layout, 3);
  Tensor targets = build_rule_targets(f.layout, f.rules, f.masked.schema, conds);
  auto glg = build_generator_loss_graph(gen, crit, f.layout, targets, 0.2, 10.0, 3);
  Expression expr = glg.loss_expr();
  CHECK_FALSE(expr.uses_input("real"));
  CHECK_FALSE(expr.uses_input("interp"));
  CHECK(expr.uses_input("z"));
  CHECK(expr.uses_input("cond"));
}

TEST_CASE("train: zero epochs leaves the initialization untouched") {
  Fixture f;
  TrainingConfig cfg = f.cfg;
  cfg.epochs = 0;
  TrainState st = train(f.encoded, f.sampler, f.layout, f.masked.schema, f.rules, cfg);

  Rng init = Rng::substream(cfg.seed, "init");
  GeneratorNet gen0 = make_generator(f.layout, cfg, init);
  CriticNet crit0 = make_critic(f.layout, cfg, init);
  CHECK(st.gen.params.flatten() == gen0.params.flatten());
  CHECK(st.crit.params.flatten() == crit0.params.flatten());
  CHECK(st.steps_done == 0);
}

TEST_CASE("train: fixed seed reproduces bit-identical parameters") {
  Fixture f;
  TrainState a = train(f.encoded, f.sampler, f.layout, f.masked.schema, f.rules, f.cfg);
  TrainState b = train(f.encoded, f.sampler, f.layout, f.masked.schema, f.rules, f.cfg);
  CHECK(a.gen.params.flatten() == b.gen.params.flatten());
  CHECK(a.crit.params.flatten() == b.crit.params.flatten());
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].critic == b.history[i].critic);
    CHECK(a.history[i].generator == b.history[i].generator);
  }
}

TEST_CASE("train: dp mode accounts per critic update and respects the ceiling") {
  Fixture f;
  TrainingConfig cfg = f.cfg;
  cfg.epochs = 1;
  cfg.n_critic = 2;
  DpConfig dp;
  dp.clip_norm = 1.0;
  dp.noise_multiplier = 1.0;
  dp.sampling_rate = 0.2;
  dp.delta = 1e-5;
  cfg.dp = dp;
  TrainState st = train(f.encoded, f.sampler, f.layout, f.masked.schema, f.rules, cfg);
  CHECK(st.dp_enabled);
  const std::size_t steps_per_epoch = f.encoded.rows() / cfg.batch_size;
  CHECK(st.accountant.steps ==
        static_cast<std::int64_t>(steps_per_epoch) * cfg.n_critic);
  CHECK_FALSE(st.budget_exhausted);
  CHECK(report_epsilon(st.accountant, dp.delta).epsilon > 0.0);

  // a ceiling below one step's cost halts immediately with the flag set
  DpConfig tight = dp;
  tight.epsilon_ceiling = 1e-6;
  cfg.dp = tight;
  cfg.epochs = 2;
  TrainState halted = train(f.encoded, f.sampler, f.layout, f.masked.schema, f.rules, cfg);
  CHECK(halted.budget_exhausted);
  CHECK(halted.accountant.steps == 1);
}

TEST_CASE("sample_synthetic: shapes, vocabulary, determinism") {
  Fixture f;
  TrainingConfig cfg = f.cfg;
  cfg.epochs = 2;
  Synthesizer model = fit_synthesizer(f.original, f.rules, cfg);

  DataTable empty = sample_synthetic(model, 0, 5);
  CHECK(empty.row_count() == 0);

  DataTable sample = sample_synthetic(model, 40, 5);
  REQUIRE(sample.row_count() == 40);
  REQUIRE(sample.schema.column_count() == 3);
  for (const auto& row : sample.rows) {
    const std::string& proto = sample.schema.columns[0].categories[row[0].cat];
    CHECK((proto == "DNS" || proto == "HTTP"));
    const std::string& port = sample.schema.columns[1].categories[row[1].cat];
    CHECK((port == "53" || port == "80"));
    CHECK(std::isfinite(row[2].num));
  }

  const std::string out_a = "/tmp/kipps_gan_sample_a.csv";
  const std::string out_b = "/tmp/kipps_gan_sample_b.csv";
  write_csv(sample, out_a);
  write_csv(sample_synthetic(model, 40, 5), out_b);
  std::ifstream fa(out_a), fb(out_b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != "");

  DataTable other = sample_synthetic(model, 40, 6);
  bool differs = false;
  for (std::size_t r = 0; r < 40 && !differs; ++r)
    differs = other.rows[r][2].num != sample.rows[r][2].num;
  CHECK(differs);
}

TEST_CASE("training config validation") {
  TrainingConfig cfg;
  cfg.validate();
  cfg.gumbel_tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainingConfig{};
  cfg.n_critic = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
