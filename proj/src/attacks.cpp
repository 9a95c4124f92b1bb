#include "kipps/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kipps/error.hpp"
#include "kipps/predictors.hpp"
#include "kipps/rng.hpp"

namespace kipps {

void AttackConfig::validate() const {
  if (member_size < 2) fail_config("attack: member size must be >= 2");
  if (shadow_count < 1) fail_config("attack: shadow count must be >= 1");
}

namespace {

DataTable subset(const DataTable& table, const std::vector<std::size_t>& ids, std::size_t from,
                 std::size_t count) {
  DataTable out;
  out.schema = table.schema;
  for (std::size_t i = from; i < from + count; ++i) out.rows.push_back(table.rows[ids[i]]);
  return out;
}

// the column whose labels the CART confidence feature scores
std::string confidence_target(const DataTable& population) {
  if (population.schema.target_column) return *population.schema.target_column;
  for (const auto& col : population.schema.columns)
    if (col.kind == ColumnKind::discrete) return col.name;
  fail_data("membership inference needs at least one discrete column");
}

struct CandidateFeaturizer {
  FeatureCodec codec;          // fitted on the synthetic set
  Tensor synth_encoded;
  FittedPredictor confidence_model;
  bool has_confidence = false;
  std::string target;

  // (distance to the closest synthetic record, confidence on the true label)
  std::pair<double, double> features(const DataTable& table, const Row& row) const {
    const auto enc = codec.encode(table.schema, row);
    double best = std::numeric_limits<double>::max();
    for (std::size_t r = 0; r < synth_encoded.rows(); ++r) {
      double d = 0.0;
      for (std::size_t c = 0; c < synth_encoded.cols(); ++c) {
        const double diff = synth_encoded.at(r, c) - enc[c];
        d += diff * diff;
        if (d >= best) break;
      }
      best = std::min(best, d);
    }
    double conf = 0.5;
    if (has_confidence) {
      const std::size_t ti = table.schema.index_of(target);
      conf = confidence_model.confidence(table.schema, row,
                                         table.label(ti, row));
    }
    return {std::sqrt(best), conf};
  }
};

CandidateFeaturizer make_featurizer(const DataTable& synthetic, const std::string& target,
                                    std::uint64_t seed) {
  CandidateFeaturizer f;
  f.codec = FeatureCodec::fit(synthetic);
  f.synth_encoded = f.codec.encode_table(synthetic);
  f.target = target;
  PredictorSpec spec;
  spec.kind = PredictorKind::cart;
  spec.seed = seed;
  try {
    f.confidence_model = train_predictor(spec, synthetic, target);
    f.has_confidence = true;
  } catch (const Error&) {
    f.has_confidence = false;  // degenerate synthetic table; distance feature only
  }
  return f;
}

}  // namespace

double membership_inference(const AttackConfig& config, const SynthesizerFn& synthesize,
                            const DataTable& population) {
  config.validate();
  const std::size_t m = config.member_size;
  const std::size_t s = static_cast<std::size_t>(config.shadow_count);
  const std::size_t needed = 2 * m * (s + 1);
  if (population.row_count() < needed)
    fail_data("population too small for disjoint shadow pools: need " + std::to_string(needed) +
              " rows, have " + std::to_string(population.row_count()));

  std::vector<std::size_t> ids(population.row_count());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  Rng rng = Rng::substream(config.seed, "mia_partition");
  rng.shuffle(ids);

  const std::string target = confidence_target(population);

  // pooled shadow feature set with membership labels
  std::vector<std::pair<double, double>> shadow_features;
  std::vector<std::int32_t> shadow_labels;
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t base = 2 * m + k * 2 * m;
    DataTable members = subset(population, ids, base, m);
    DataTable non_members = subset(population, ids, base + m, m);
    DataTable synth = synthesize(members, Rng::derive(config.seed, "shadow", k));
    if (synth.rows.empty()) fail_data("shadow synthesizer returned an empty table");
    CandidateFeaturizer featurizer =
        make_featurizer(synth, target, Rng::derive(config.seed, "shadow_cart", k));
    for (const auto& row : members.rows) {
      shadow_features.push_back(featurizer.features(members, row));
      shadow_labels.push_back(1);
    }
    for (const auto& row : non_members.rows) {
      shadow_features.push_back(featurizer.features(non_members, row));
      shadow_labels.push_back(0);
    }
  }

  // standardize the two features over the shadow pool, then logistic attack
  double mean_d = 0.0, mean_c = 0.0;
  for (const auto& [d, c] : shadow_features) {
    mean_d += d;
    mean_c += c;
  }
  mean_d /= static_cast<double>(shadow_features.size());
  mean_c /= static_cast<double>(shadow_features.size());
  double sd_d = 0.0, sd_c = 0.0;
  for (const auto& [d, c] : shadow_features) {
    sd_d += (d - mean_d) * (d - mean_d);
    sd_c += (c - mean_c) * (c - mean_c);
  }
  sd_d = std::max(std::sqrt(sd_d / static_cast<double>(shadow_features.size())), 1e-9);
  sd_c = std::max(std::sqrt(sd_c / static_cast<double>(shadow_features.size())), 1e-9);

  Tensor sx(shadow_features.size(), 2);
  for (std::size_t i = 0; i < shadow_features.size(); ++i) {
    sx.at(i, 0) = (shadow_features[i].first - mean_d) / sd_d;
    sx.at(i, 1) = (shadow_features[i].second - mean_c) / sd_c;
  }
  LogisticFit attack = logistic_fit(sx, shadow_labels);

  // target synthesizer on the held-out member set
  DataTable members = subset(population, ids, 0, m);
  DataTable non_members = subset(population, ids, m, m);
  DataTable synth = synthesize(members, Rng::derive(config.seed, "target"));
  if (synth.rows.empty()) fail_data("target synthesizer returned an empty table");
  CandidateFeaturizer featurizer =
      make_featurizer(synth, target, Rng::derive(config.seed, "target_cart"));

  auto predict_member = [&](const DataTable& table, const Row& row) {
    const auto [d, c] = featurizer.features(table, row);
    const double eta = attack.beta[0] + attack.beta[1] * (d - mean_d) / sd_d +
                       attack.beta[2] * (c - mean_c) / sd_c;
    return eta > 0.0;
  };

  std::size_t true_pos = 0, true_neg = 0;
  for (const auto& row : members.rows)
    if (predict_member(members, row)) ++true_pos;
  for (const auto& row : non_members.rows)
    if (!predict_member(non_members, row)) ++true_neg;
  const double tpr = static_cast<double>(true_pos) / static_cast<double>(m);
  const double tnr = static_cast<double>(true_neg) / static_cast<double>(m);
  return 0.5 * (tpr + tnr);
}

double attribute_inference(const AttackConfig& config, const DataTable& synthetic,
                           const DataTable& original, const std::string& sensitive) {
  config.validate();
  if (synthetic.rows.empty() || original.rows.empty()) fail_data("attribute inference: empty table");
  const ColumnSpec* sens = original.schema.find(sensitive);
  if (!sens) fail_data("attribute inference: no column '" + sensitive + "'");
  if (sens->kind != ColumnKind::discrete)
    fail_data("attribute inference: sensitive column must be discrete");

  PredictorSpec spec;
  spec.kind = PredictorKind::cart;
  spec.seed = config.seed;
  FittedPredictor model = train_predictor(spec, synthetic, sensitive);

  const std::size_t si = original.schema.index_of(sensitive);
  std::size_t hits = 0;
  for (const auto& row : original.rows) {
    const std::string& truth = original.label(si, row);
    if (model.predict_label(original.schema, row) == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(original.row_count());
}

}  // namespace kipps
