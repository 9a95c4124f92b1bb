#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kipps/predictors.hpp"
#include "kipps/schema.hpp"

namespace kipps {

// Special functions behind the p-values; exposed so tests can pin them
// against quadrature oracles.
double regularized_gamma_q(double a, double x);  // upper tail
double chi2_sf(double x, double df);
double kolmogorov_q(double lambda);  // two-sided KS survival

std::string table_fingerprint(const DataTable& table);

struct PmseResult {
  double pmse = 0.0;
  double ratio = 0.0;
  std::vector<double> null_pmses;
};

// CART propensity of being synthetic on the stacked table; ratio against a
// K=20 permuted-label null.
PmseResult pmse_score(const DataTable& original, const DataTable& synthetic, int cart_depth,
                      std::uint64_t seed);

double chi2_avg_p(const DataTable& original, const DataTable& synthetic);
double ks_avg_p(const DataTable& original, const DataTable& synthetic);

struct CoefficientDetail {
  std::string name;
  double beta_original = 0.0, beta_synthetic = 0.0;
  double se_original = 0.0, se_synthetic = 0.0;
  double ci_overlap = 0.0;  // unclipped, can be negative
  double std_diff = 0.0;
  bool excluded = false;

  bool operator==(const CoefficientDetail&) const = default;
};

struct RegressionMetricsResult {
  double ci_overlap_mean = 0.0;
  double std_diff_mean = 0.0;
  std::vector<CoefficientDetail> coefficients;
  std::size_t excluded_count = 0;
};

// Per-coefficient interval-overlap measure, unclipped:
// 0.5 * [(min(hi) - max(lo)) / (hi_o - lo_o) + (min(hi) - max(lo)) / (hi_s - lo_s)]
double ci_overlap(double lo_o, double hi_o, double lo_s, double hi_s);
double standardized_difference(double beta_o, double beta_s, double se_o);

// Logistic regressions on both tables (binary target, shared encoding),
// Woo-style confidence-interval overlap and standardized differences.
RegressionMetricsResult regression_metrics(const DataTable& original, const DataTable& synthetic,
                                           const std::string& target);

struct ClassifierUtilityEntry {
  PredictorKind kind = PredictorKind::cart;
  double acc_real = 0.0, acc_synth = 0.0, gap = 0.0;
  bool flagged = false;  // e.g. class missing from a training table

  bool operator==(const ClassifierUtilityEntry&) const = default;
};

struct ClassifierUtilityResult {
  std::vector<ClassifierUtilityEntry> entries;
  double mean_gap = 0.0;
  double std_gap = 0.0;
};

ClassifierUtilityResult classifier_utility(const DataTable& original_train,
                                           const DataTable& synthetic_train,
                                           const DataTable& holdout,
                                           const std::vector<PredictorSpec>& specs,
                                           const std::string& target);

std::vector<PredictorSpec> default_utility_specs(std::uint64_t seed);

struct EvalReport {
  std::string version = "kipps-eval-1";
  std::optional<double> pmse, pmse_ratio;
  std::optional<double> chi2_avg_p, ks_avg_p;
  std::optional<double> ci_overlap_mean, std_diff_mean;
  std::vector<CoefficientDetail> coefficients;
  std::vector<ClassifierUtilityEntry> classifiers;
  std::optional<double> mean_gap, std_gap;
  std::optional<double> mia_accuracy, aia_accuracy;
  std::string original_hash, synthetic_hash;
  std::uint64_t seed = 0;

  bool operator==(const EvalReport&) const = default;
};

void save_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);
std::string report_summary(const EvalReport& report);

struct EvalOptions {
  bool fidelity = true;
  bool utility = true;
  std::optional<std::string> target;  // regression + utility label
  double holdout_fraction = 0.25;
  int cart_depth = 6;
  std::uint64_t seed = 0;
};

// Full battery over an original/synthetic pair; the utility holdout is
// split off the original internally.
EvalReport evaluate(const DataTable& original, const DataTable& synthetic,
                    const EvalOptions& options);

}  // namespace kipps
