#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kipps/schema.hpp"
#include "kipps/tensor.hpp"

namespace kipps {

enum class PredictorKind { cart, random_forest, knn, linear_svm, logistic_regression, mlp };

std::string predictor_kind_name(PredictorKind kind);

struct PredictorSpec {
  PredictorKind kind = PredictorKind::cart;
  int max_depth = 6;       // cart / forest
  int trees = 50;          // forest
  int min_leaf = 2;        // cart / forest
  int neighbors = 5;       // knn
  double l2_reg = 1e-4;    // svm
  std::vector<std::size_t> hidden{64};  // mlp
  std::uint64_t seed = 0;

  void validate() const;
};

// Encoded-row feature map: one-hot per discrete column (category list frozen
// from the reference table), (x - mean) / (4 stdev) unclamped per continuous
// column. Rows from other tables are matched by column name and category
// label; unseen labels encode as an all-zero block.
class FeatureCodec {
 public:
  static FeatureCodec fit(const DataTable& reference, const std::vector<std::string>& exclude = {});

  std::size_t width() const { return width_; }
  std::vector<double> encode(const TableSchema& schema, const Row& row) const;
  Tensor encode_table(const DataTable& table) const;

  std::vector<std::string> feature_names() const;
  // last one-hot slot of every discrete block (dropped as the reference
  // level when a design matrix must be full rank)
  std::vector<std::size_t> reference_level_features() const;

 private:
  struct Column {
    std::string name;
    ColumnKind kind;
    std::vector<std::string> categories;  // discrete
    double mean = 0.0, stdev = 1.0;       // continuous
    std::size_t offset = 0;
  };
  std::vector<Column> columns_;
  std::size_t width_ = 0;
};

class PredictorModel {
 public:
  virtual ~PredictorModel() = default;
  // class index; ties resolve to the lowest index
  virtual std::int32_t predict(const std::vector<double>& features) const = 0;
  // class distribution (uniform fallback when a model has no natural one)
  virtual std::vector<double> predict_proba(const std::vector<double>& features) const = 0;
};

struct FittedPredictor {
  PredictorSpec spec;
  FeatureCodec codec;
  std::vector<std::string> classes;
  std::unique_ptr<PredictorModel> model;
  bool flagged = false;  // e.g. single-class training data

  std::string predict_label(const TableSchema& schema, const Row& row) const;
  double accuracy(const DataTable& test, const std::string& target) const;
  // probability the model assigns to `label` for this row
  double confidence(const TableSchema& schema, const Row& row, const std::string& label) const;
};

FittedPredictor train_predictor(const PredictorSpec& spec, const DataTable& train,
                                const std::string& target);

// Plain CART over a prepared feature matrix (used directly by the
// propensity-score metric and the attacks).
class CartModel : public PredictorModel {
 public:
  // labels in [0, n_classes); feature_subsample = 0 means all features
  static std::unique_ptr<CartModel> fit(const Tensor& x, const std::vector<std::int32_t>& y,
                                        std::size_t n_classes, int max_depth, int min_leaf,
                                        std::size_t feature_subsample, std::uint64_t seed);
  std::int32_t predict(const std::vector<double>& features) const override;
  std::vector<double> predict_proba(const std::vector<double>& features) const override;

 private:
  struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> distribution;
  };
  std::vector<TreeNode> nodes_;
  std::size_t leaf_for(const std::vector<double>& features) const;
};

// Damped-Newton maximum likelihood for a binary target; standard errors from
// the inverse observed information.
struct LogisticFit {
  std::vector<double> beta;  // intercept first
  std::vector<double> se;
  bool converged = false;
  bool separated = false;
  double loglik = 0.0;
};

LogisticFit logistic_fit(const Tensor& x, const std::vector<std::int32_t>& y01,
                         int max_iter = 50);

}  // namespace kipps
