#include "kipps/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "kipps/autodiff.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

std::string predictor_kind_name(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::cart: return "cart";
    case PredictorKind::random_forest: return "random_forest";
    case PredictorKind::knn: return "knn";
    case PredictorKind::linear_svm: return "linear_svm";
    case PredictorKind::logistic_regression: return "logistic_regression";
    case PredictorKind::mlp: return "mlp";
  }
  return "?";
}

void PredictorSpec::validate() const {
  if (max_depth < 1 || trees < 1 || min_leaf < 1 || neighbors < 1)
    fail_config("predictor: hyperparameters must be positive");
  if (l2_reg < 0.0) fail_config("predictor: l2_reg must be nonnegative");
  for (auto h : hidden)
    if (h < 1) fail_config("predictor: hidden widths must be positive");
}

FeatureCodec FeatureCodec::fit(const DataTable& reference,
                               const std::vector<std::string>& exclude) {
  FeatureCodec codec;
  for (std::size_t c = 0; c < reference.schema.column_count(); ++c) {
    const ColumnSpec& spec = reference.schema.columns[c];
    if (std::find(exclude.begin(), exclude.end(), spec.name) != exclude.end()) continue;
    Column col;
    col.name = spec.name;
    col.kind = spec.kind;
    col.offset = codec.width_;
    if (spec.kind == ColumnKind::discrete) {
      col.categories = spec.categories;
      codec.width_ += col.categories.size();
    } else {
      double sum = 0.0;
      for (const auto& row : reference.rows) sum += row[c].num;
      col.mean = reference.rows.empty() ? 0.0 : sum / static_cast<double>(reference.row_count());
      double sq = 0.0;
      for (const auto& row : reference.rows)
        sq += (row[c].num - col.mean) * (row[c].num - col.mean);
      col.stdev = reference.rows.empty()
                      ? 1.0
                      : std::max(std::sqrt(sq / static_cast<double>(reference.row_count())), 1e-6);
      codec.width_ += 1;
    }
    codec.columns_.push_back(std::move(col));
  }
  return codec;
}

std::vector<double> FeatureCodec::encode(const TableSchema& schema, const Row& row) const {
  std::vector<double> out(width_, 0.0);
  for (const auto& col : columns_) {
    const ColumnSpec* src = schema.find(col.name);
    if (!src) fail_data("feature codec: column '" + col.name + "' missing from row schema");
    const std::size_t ci = schema.index_of(col.name);
    if (col.kind == ColumnKind::discrete) {
      const std::string& label = src->categories.at(static_cast<std::size_t>(row[ci].cat));
      for (std::size_t j = 0; j < col.categories.size(); ++j) {
        if (col.categories[j] == label) {
          out[col.offset + j] = 1.0;
          break;
        }
      }
    } else {
      out[col.offset] = (row[ci].num - col.mean) / (4.0 * col.stdev);
    }
  }
  return out;
}

Tensor FeatureCodec::encode_table(const DataTable& table) const {
  Tensor out(table.row_count(), width_);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const auto features = encode(table.schema, table.rows[r]);
    std::copy(features.begin(), features.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(r * width_));
  }
  return out;
}

std::vector<std::string> FeatureCodec::feature_names() const {
  std::vector<std::string> names(width_);
  for (const auto& col : columns_) {
    if (col.kind == ColumnKind::discrete) {
      for (std::size_t j = 0; j < col.categories.size(); ++j)
        names[col.offset + j] = col.name + "=" + col.categories[j];
    } else {
      names[col.offset] = col.name;
    }
  }
  return names;
}

std::vector<std::size_t> FeatureCodec::reference_level_features() const {
  std::vector<std::size_t> out;
  for (const auto& col : columns_)
    if (col.kind == ColumnKind::discrete && !col.categories.empty())
      out.push_back(col.offset + col.categories.size() - 1);
  return out;
}

namespace {

double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double g = 1.0;
  for (double c : counts) {
    const double p = c / total;
    g -= p * p;
  }
  return g;
}

}  // namespace

std::size_t CartModel::leaf_for(const std::vector<double>& features) const {
  std::size_t node = 0;
  while (nodes_[node].feature >= 0) {
    node = features[static_cast<std::size_t>(nodes_[node].feature)] <= nodes_[node].threshold
               ? static_cast<std::size_t>(nodes_[node].left)
               : static_cast<std::size_t>(nodes_[node].right);
  }
  return node;
}

std::int32_t CartModel::predict(const std::vector<double>& features) const {
  const auto& dist = nodes_[leaf_for(features)].distribution;
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[best]) best = i;
  return static_cast<std::int32_t>(best);
}

std::vector<double> CartModel::predict_proba(const std::vector<double>& features) const {
  return nodes_[leaf_for(features)].distribution;
}

std::unique_ptr<CartModel> CartModel::fit(const Tensor& x, const std::vector<std::int32_t>& y,
                                          std::size_t n_classes, int max_depth, int min_leaf,
                                          std::size_t feature_subsample, std::uint64_t seed) {
  if (x.rows() != y.size()) fail_data("cart: feature/label size mismatch");
  if (x.rows() == 0) fail_data("cart: empty training data");
  auto model = std::make_unique<CartModel>();
  Rng rng = Rng::substream(seed, "cart_features");

  struct Work {
    std::vector<std::size_t> rows;
    int depth;
    int node;
  };

  auto leaf_distribution = [&](const std::vector<std::size_t>& rows) {
    std::vector<double> dist(n_classes, 0.0);
    for (auto r : rows) dist[static_cast<std::size_t>(y[r])] += 1.0;
    for (auto& d : dist) d /= static_cast<double>(rows.size());
    return dist;
  };

  std::vector<Work> stack;
  model->nodes_.push_back({});
  {
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), 0, 0});
  }

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    model->nodes_[static_cast<std::size_t>(work.node)].distribution =
        leaf_distribution(work.rows);

    bool pure = false;
    for (double d : model->nodes_[static_cast<std::size_t>(work.node)].distribution)
      pure |= d == 1.0;
    if (work.depth >= max_depth || pure ||
        work.rows.size() < static_cast<std::size_t>(2 * min_leaf)) {
      continue;
    }

    std::vector<std::size_t> features(x.cols());
    std::iota(features.begin(), features.end(), 0);
    if (feature_subsample > 0 && feature_subsample < x.cols()) {
      rng.shuffle(features);
      features.resize(feature_subsample);
      std::sort(features.begin(), features.end());
    }

    const double parent_total = static_cast<double>(work.rows.size());
    std::vector<double> parent_counts(n_classes, 0.0);
    for (auto r : work.rows) parent_counts[static_cast<std::size_t>(y[r])] += 1.0;
    const double parent_gini = gini(parent_counts, parent_total);

    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> order = work.rows;
    std::vector<double> left_counts(n_classes), right_counts(n_classes);
    for (std::size_t f : features) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x.at(a, f), vb = x.at(b, f);
        if (va != vb) return va < vb;
        return a < b;
      });
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_counts[static_cast<std::size_t>(y[order[i]])] += 1.0;
        left_total += 1.0;
        const double v = x.at(order[i], f);
        const double v_next = x.at(order[i + 1], f);
        if (v == v_next) continue;
        if (left_total < min_leaf || parent_total - left_total < min_leaf) continue;
        for (std::size_t k = 0; k < n_classes; ++k)
          right_counts[k] = parent_counts[k] - left_counts[k];
        const double g = (left_total / parent_total) * gini(left_counts, left_total) +
                         ((parent_total - left_total) / parent_total) *
                             gini(right_counts, parent_total - left_total);
        const double gain = parent_gini - g;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (v + v_next);
        }
      }
    }

    if (best_feature < 0) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : work.rows) {
      if (x.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) continue;

    const int left_id = static_cast<int>(model->nodes_.size());
    model->nodes_.push_back({});
    const int right_id = static_cast<int>(model->nodes_.size());
    model->nodes_.push_back({});
    TreeNode& parent = model->nodes_[static_cast<std::size_t>(work.node)];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = left_id;
    parent.right = right_id;
    stack.push_back({std::move(right_rows), work.depth + 1, right_id});
    stack.push_back({std::move(left_rows), work.depth + 1, left_id});
  }
  return model;
}

namespace {

class ForestModel : public PredictorModel {
 public:
  std::vector<std::unique_ptr<CartModel>> trees;

  std::vector<double> predict_proba(const std::vector<double>& features) const override {
    std::vector<double> votes;
    for (const auto& tree : trees) {
      auto p = tree->predict_proba(features);
      if (votes.empty()) votes.assign(p.size(), 0.0);
      votes[static_cast<std::size_t>(tree->predict(features))] += 1.0;
    }
    for (auto& v : votes) v /= static_cast<double>(trees.size());
    return votes;
  }
  std::int32_t predict(const std::vector<double>& features) const override {
    auto probs = predict_proba(features);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[best]) best = i;
    return static_cast<std::int32_t>(best);
  }
};

class KnnModel : public PredictorModel {
 public:
  Tensor x;
  std::vector<std::int32_t> y;
  std::size_t n_classes = 0;
  int k = 5;

  std::vector<double> predict_proba(const std::vector<double>& features) const override {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double d = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double diff = x.at(r, c) - features[c];
        d += diff * diff;
      }
      dist.emplace_back(d, r);
    }
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::vector<double> votes(n_classes, 0.0);
    for (std::size_t i = 0; i < kk; ++i)
      votes[static_cast<std::size_t>(y[dist[i].second])] += 1.0 / static_cast<double>(kk);
    return votes;
  }
  std::int32_t predict(const std::vector<double>& features) const override {
    auto votes = predict_proba(features);
    std::size_t best = 0;
    for (std::size_t i = 1; i < votes.size(); ++i)
      if (votes[i] > votes[best]) best = i;
    return static_cast<std::int32_t>(best);
  }
};

// one-vs-rest linear scorers (hinge or logistic weights)
class LinearOvrModel : public PredictorModel {
 public:
  std::vector<std::vector<double>> weights;  // per class, bias first

  double score(std::size_t cls, const std::vector<double>& features) const {
    const auto& w = weights[cls];
    double s = w[0];
    for (std::size_t i = 0; i < features.size(); ++i) s += w[i + 1] * features[i];
    return s;
  }
  std::int32_t predict(const std::vector<double>& features) const override {
    std::size_t best = 0;
    double best_score = score(0, features);
    for (std::size_t cls = 1; cls < weights.size(); ++cls) {
      const double s = score(cls, features);
      if (s > best_score) {
        best_score = s;
        best = cls;
      }
    }
    return static_cast<std::int32_t>(best);
  }
  std::vector<double> predict_proba(const std::vector<double>& features) const override {
    std::vector<double> out(weights.size());
    double mx = -1e300;
    for (std::size_t cls = 0; cls < weights.size(); ++cls) {
      out[cls] = score(cls, features);
      mx = std::max(mx, out[cls]);
    }
    double denom = 0.0;
    for (auto& v : out) {
      v = std::exp(v - mx);
      denom += v;
    }
    for (auto& v : out) v /= denom;
    return out;
  }
};

class MlpModel : public PredictorModel {
 public:
  MlpSpec spec;
  ParamSet params;

  std::vector<double> predict_proba(const std::vector<double>& features) const override {
    auto g = std::make_shared<Graph>();
    int in = g->input("x", 1, spec.input_dim);
    int logits = build_mlp(*g, spec, "mlp", in);
    int probs = g->segment_softmax(logits, {{0, spec.output_dim}});
    Tensor x(1, spec.input_dim);
    std::copy(features.begin(), features.end(), x.data.begin());
    Tensor out = forward(Expression{g, probs}, params, {{"x", x}});
    return out.data;
  }
  std::int32_t predict(const std::vector<double>& features) const override {
    auto probs = predict_proba(features);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[best]) best = i;
    return static_cast<std::int32_t>(best);
  }
};

// full-batch subgradient descent on the hinge loss
std::vector<double> svm_binary(const Tensor& x, const std::vector<double>& sign, double l2,
                               int epochs) {
  std::vector<double> w(x.cols() + 1, 0.0);
  for (int t = 1; t <= epochs; ++t) {
    const double lr = 0.5 / (1.0 + 0.02 * static_cast<double>(t));
    std::vector<double> grad(w.size(), 0.0);
    for (std::size_t i = 1; i < w.size(); ++i) grad[i] = l2 * w[i];
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double s = w[0];
      for (std::size_t c = 0; c < x.cols(); ++c) s += w[c + 1] * x.at(r, c);
      if (sign[r] * s < 1.0) {
        grad[0] -= sign[r] / static_cast<double>(x.rows());
        for (std::size_t c = 0; c < x.cols(); ++c)
          grad[c + 1] -= sign[r] * x.at(r, c) / static_cast<double>(x.rows());
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
  }
  return w;
}

// Gauss-Jordan inverse with partial pivoting; false when singular
bool invert_matrix(std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12) return false;
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = m[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      m[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  m = std::move(inv);
  return true;
}

}  // namespace

LogisticFit logistic_fit(const Tensor& x, const std::vector<std::int32_t>& y01, int max_iter) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols() + 1;  // intercept first
  LogisticFit fit;
  fit.beta.assign(p, 0.0);

  auto design = [&](std::size_t r, std::size_t j) { return j == 0 ? 1.0 : x.at(r, j - 1); };
  auto loglik = [&](const std::vector<double>& beta) {
    double ll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += beta[j] * design(r, j);
      const double soft = eta > 30.0 ? eta : (eta < -30.0 ? 0.0 : std::log1p(std::exp(eta)));
      ll += (y01[r] ? eta : 0.0) - soft;
    }
    return ll;
  };

  double current_ll = loglik(fit.beta);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<double> grad(p, 0.0);
    std::vector<std::vector<double>> hess(p, std::vector<double>(p, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += fit.beta[j] * design(r, j);
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double wr = std::max(mu * (1.0 - mu), 1e-12);
      for (std::size_t j = 0; j < p; ++j) {
        grad[j] += (static_cast<double>(y01[r]) - mu) * design(r, j);
        for (std::size_t k = j; k < p; ++k) hess[j][k] += wr * design(r, j) * design(r, k);
      }
    }
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < j; ++k) hess[j][k] = hess[k][j];
    for (std::size_t j = 0; j < p; ++j) hess[j][j] += 1e-10;

    auto hinv = hess;
    if (!invert_matrix(hinv)) break;
    std::vector<double> step(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k) step[j] += hinv[j][k] * grad[k];

    double scale = 1.0;
    std::vector<double> candidate(p);
    double cand_ll = -1e300;
    for (int halvings = 0; halvings < 30; ++halvings) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = fit.beta[j] + scale * step[j];
      cand_ll = loglik(candidate);
      if (cand_ll >= current_ll - 1e-12) break;
      scale *= 0.5;
    }
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      max_delta = std::max(max_delta, std::abs(candidate[j] - fit.beta[j]));
    fit.beta = candidate;
    current_ll = cand_ll;
    if (max_delta < 1e-8) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = current_ll;
  for (double b : fit.beta) fit.separated |= std::abs(b) > 30.0;
  // a perfect fit with a still-growing |beta| is separation as well
  fit.separated |= !fit.converged && current_ll > -1e-6;

  std::vector<std::vector<double>> info(p, std::vector<double>(p, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    double eta = 0.0;
    for (std::size_t j = 0; j < p; ++j) eta += fit.beta[j] * design(r, j);
    const double mu = 1.0 / (1.0 + std::exp(-eta));
    const double wr = std::max(mu * (1.0 - mu), 1e-12);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j; k < p; ++k) info[j][k] += wr * design(r, j) * design(r, k);
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) info[j][k] = info[k][j];
  fit.se.assign(p, std::numeric_limits<double>::quiet_NaN());
  if (invert_matrix(info)) {
    for (std::size_t j = 0; j < p; ++j) fit.se[j] = std::sqrt(std::max(info[j][j], 0.0));
    for (double se : fit.se) fit.separated |= se > 1e3;
  }
  return fit;
}

std::string FittedPredictor::predict_label(const TableSchema& schema, const Row& row) const {
  const auto features = codec.encode(schema, row);
  const auto idx = static_cast<std::size_t>(model->predict(features));
  return classes.at(idx);
}

double FittedPredictor::accuracy(const DataTable& test, const std::string& target) const {
  if (test.rows.empty()) fail_data("accuracy: empty test table");
  const std::size_t ti = test.schema.index_of(target);
  std::size_t hits = 0;
  for (const auto& row : test.rows) {
    const std::string& truth =
        test.schema.columns[ti].categories.at(static_cast<std::size_t>(row[ti].cat));
    if (predict_label(test.schema, row) == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.row_count());
}

double FittedPredictor::confidence(const TableSchema& schema, const Row& row,
                                   const std::string& label) const {
  const auto probs = model->predict_proba(codec.encode(schema, row));
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == label) return probs[i];
  return 0.0;
}

FittedPredictor train_predictor(const PredictorSpec& spec, const DataTable& train,
                                const std::string& target) {
  spec.validate();
  if (train.rows.empty()) fail_data("train_predictor: empty training table");
  const std::size_t ti = train.schema.index_of(target);
  if (train.schema.columns[ti].kind != ColumnKind::discrete)
    fail_data("train_predictor: target must be discrete");

  FittedPredictor fp;
  fp.spec = spec;
  fp.codec = FeatureCodec::fit(train, {target});
  fp.classes = train.schema.columns[ti].categories;

  std::vector<std::int32_t> y;
  y.reserve(train.row_count());
  std::vector<bool> seen(fp.classes.size(), false);
  std::size_t distinct = 0;
  for (const auto& row : train.rows) {
    y.push_back(row[ti].cat);
    if (!seen[static_cast<std::size_t>(row[ti].cat)]) {
      seen[static_cast<std::size_t>(row[ti].cat)] = true;
      ++distinct;
    }
  }
  if (distinct < 2) fail_data("train_predictor: single-class target");

  const Tensor x = fp.codec.encode_table(train);
  const std::size_t n_classes = fp.classes.size();

  switch (spec.kind) {
    case PredictorKind::cart:
      fp.model = CartModel::fit(x, y, n_classes, spec.max_depth, spec.min_leaf, 0, spec.seed);
      break;
    case PredictorKind::random_forest: {
      auto forest = std::make_unique<ForestModel>();
      const auto subsample = static_cast<std::size_t>(
          std::lround(std::ceil(std::sqrt(static_cast<double>(x.cols())))));
      for (int t = 0; t < spec.trees; ++t) {
        Rng boot = Rng::substream(spec.seed, "forest_bootstrap", static_cast<std::uint64_t>(t));
        Tensor xb(x.rows(), x.cols());
        std::vector<std::int32_t> yb(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const std::size_t src = boot.uniform_index(x.rows());
          for (std::size_t c = 0; c < x.cols(); ++c) xb.at(r, c) = x.at(src, c);
          yb[r] = y[src];
        }
        forest->trees.push_back(
            CartModel::fit(xb, yb, n_classes, spec.max_depth, spec.min_leaf, subsample,
                           Rng::derive(spec.seed, "forest_tree", static_cast<std::uint64_t>(t))));
      }
      fp.model = std::move(forest);
      break;
    }
    case PredictorKind::knn: {
      auto knn = std::make_unique<KnnModel>();
      knn->x = x;
      knn->y = y;
      knn->n_classes = n_classes;
      knn->k = spec.neighbors;
      fp.model = std::move(knn);
      break;
    }
    case PredictorKind::linear_svm: {
      auto ovr = std::make_unique<LinearOvrModel>();
      for (std::size_t cls = 0; cls < n_classes; ++cls) {
        std::vector<double> sign(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r)
          sign[r] = y[r] == static_cast<std::int32_t>(cls) ? 1.0 : -1.0;
        ovr->weights.push_back(svm_binary(x, sign, spec.l2_reg, 300));
      }
      fp.model = std::move(ovr);
      break;
    }
    case PredictorKind::logistic_regression: {
      auto ovr = std::make_unique<LinearOvrModel>();
      for (std::size_t cls = 0; cls < n_classes; ++cls) {
        std::vector<std::int32_t> y01(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r)
          y01[r] = y[r] == static_cast<std::int32_t>(cls) ? 1 : 0;
        LogisticFit bin = logistic_fit(x, y01);
        fp.flagged |= bin.separated;
        ovr->weights.push_back(bin.beta);
      }
      fp.model = std::move(ovr);
      break;
    }
    case PredictorKind::mlp: {
      auto mlp = std::make_unique<MlpModel>();
      mlp->spec = MlpSpec{x.cols(), spec.hidden, n_classes, Activation::tanh_act};
      Rng rng = Rng::substream(spec.seed, "mlp_init");
      init_mlp_params(mlp->params, "mlp", mlp->spec, rng);

      Tensor onehot(x.rows(), n_classes);
      for (std::size_t r = 0; r < x.rows(); ++r)
        onehot.at(r, static_cast<std::size_t>(y[r])) = 1.0;

      auto g = std::make_shared<Graph>();
      int in = g->input("x", x.rows(), x.cols());
      int logits = build_mlp(*g, mlp->spec, "mlp", in);
      int probs = g->segment_softmax(logits, {{0, n_classes}});
      int ce = g->mean_all(
          g->row_sum(g->mul(g->neg(g->log_(g->add_scalar(probs, 1e-12))), g->constant(onehot))));
      Expression loss{g, ce};

      AdamState opt;
      AdamConfig adam;
      adam.lr = 5e-3;
      adam.beta1 = 0.9;
      adam.beta2 = 0.999;
      InputMap inputs{{"x", x}};
      for (int epoch = 0; epoch < 200; ++epoch) {
        GradMap grads = grad(loss, mlp->params, inputs);
        adam_step(mlp->params, grads, opt, adam);
      }
      fp.model = std::move(mlp);
      break;
    }
  }
  return fp;
}

}  // namespace kipps
