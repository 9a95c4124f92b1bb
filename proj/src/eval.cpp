#include "kipps/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

namespace {


// series expansion of the lower regularized gamma P(a, x), x < a + 1
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for the upper regularized gamma Q(a, x), x >= a + 1
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) fail_data("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_sf(double x, double df) {
  if (df <= 0.0) fail_data("chi2_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 1e-8) return 1.0;
  if (lambda < 1.18) {
    // theta-function form of the CDF, accurate for small lambda
    const double pi = 3.14159265358979323846;
    const double t = std::exp(-pi * pi / (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * pi) / lambda *
                       (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += sign * term;
    sign = -sign;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

std::string table_fingerprint(const DataTable& table) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) { h = fnv1a64(s, h); };
  for (const auto& col : table.schema.columns) {
    mix(col.name);
    mix(col.kind == ColumnKind::continuous ? "#c" : "#d");
  }
  char buf[64];
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (table.schema.columns[c].kind == ColumnKind::continuous) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), row[c].num);
        (void)ec;
        mix(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
      } else {
        mix(table.label(c, row));
      }
      mix("|");
    }
    mix("\n");
  }
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

void require_compatible(const DataTable& original, const DataTable& synthetic) {
  for (const auto& col : original.schema.columns) {
    const ColumnSpec* other = synthetic.schema.find(col.name);
    if (!other || other->kind != col.kind)
      fail_data("tables are not schema-compatible at column '" + col.name + "'");
  }
  if (original.schema.column_count() != synthetic.schema.column_count())
    fail_data("tables are not schema-compatible: column counts differ");
  if (original.rows.empty() || synthetic.rows.empty()) fail_data("empty table");
}

// Stacks the two tables under a union schema (categories merged by label).
DataTable stack_tables(const DataTable& original, const DataTable& synthetic) {
  DataTable stacked;
  stacked.schema = original.schema;
  for (auto& col : stacked.schema.columns) {
    if (col.kind != ColumnKind::discrete) continue;
    const ColumnSpec* other = synthetic.schema.find(col.name);
    for (const auto& cat : other->categories)
      if (col.category_index(cat) < 0) col.categories.push_back(cat);
    col.categories_closed = true;
  }
  auto append = [&stacked](const DataTable& src) {
    for (const auto& row : src.rows) {
      Row out(row.size());
      for (std::size_t c = 0; c < stacked.schema.column_count(); ++c) {
        const std::size_t sc = src.schema.index_of(stacked.schema.columns[c].name);
        if (stacked.schema.columns[c].kind == ColumnKind::continuous) {
          out[c] = row[sc];
        } else {
          const std::string& label = src.label(sc, row);
          out[c] = Cell::discrete(stacked.schema.columns[c].category_index(label));
        }
      }
      stacked.rows.push_back(std::move(out));
    }
  };
  append(original);
  append(synthetic);
  return stacked;
}

double propensity_mse(const Tensor& x, const std::vector<std::int32_t>& labels, double c,
                      int cart_depth, std::uint64_t seed) {
  auto cart = CartModel::fit(x, labels, 2, cart_depth, 25, 0, seed);
  double acc = 0.0;
  std::vector<double> features(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < x.cols(); ++j) features[j] = x.at(r, j);
    const double p = cart->predict_proba(features)[1];
    acc += (p - c) * (p - c);
  }
  return acc / static_cast<double>(x.rows());
}

}  // namespace

PmseResult pmse_score(const DataTable& original, const DataTable& synthetic, int cart_depth,
                      std::uint64_t seed) {
  require_compatible(original, synthetic);
  const DataTable stacked = stack_tables(original, synthetic);
  const FeatureCodec codec = FeatureCodec::fit(stacked);
  const Tensor x = codec.encode_table(stacked);

  std::vector<std::int32_t> labels(stacked.row_count(), 0);
  for (std::size_t r = original.row_count(); r < stacked.row_count(); ++r) labels[r] = 1;
  const double c =
      static_cast<double>(synthetic.row_count()) / static_cast<double>(stacked.row_count());

  PmseResult res;
  res.pmse = propensity_mse(x, labels, c, cart_depth, Rng::derive(seed, "pmse"));
  const double bound = c * c + (1.0 - c) * (1.0 - c);
  if (res.pmse > bound + 1e-12) fail_data("pmse exceeds its theoretical bound");

  Rng rng = Rng::substream(seed, "pmse_null");
  double null_sum = 0.0;
  std::vector<std::int32_t> permuted = labels;
  for (int k = 0; k < 20; ++k) {
    rng.shuffle(permuted);
    const double null_pmse =
        propensity_mse(x, permuted, c, cart_depth, Rng::derive(seed, "pmse_null_fit", k));
    res.null_pmses.push_back(null_pmse);
    null_sum += null_pmse;
  }
  const double null_mean = null_sum / 20.0;
  res.ratio = res.pmse / std::max(null_mean, 1e-12);
  return res;
}

double chi2_avg_p(const DataTable& original, const DataTable& synthetic) {
  require_compatible(original, synthetic);
  double sum = 0.0;
  std::size_t n_cols = 0;
  for (const auto& col : original.schema.columns) {
    if (col.kind != ColumnKind::discrete) continue;
    ++n_cols;

    // union category space
    std::vector<std::string> cats = col.categories;
    const ColumnSpec* syn_col = synthetic.schema.find(col.name);
    for (const auto& cat : syn_col->categories)
      if (std::find(cats.begin(), cats.end(), cat) == cats.end()) cats.push_back(cat);

    std::map<std::string, double> orig_counts, syn_counts;
    const std::size_t oc = original.schema.index_of(col.name);
    const std::size_t sc = synthetic.schema.index_of(col.name);
    for (const auto& row : original.rows) orig_counts[original.label(oc, row)] += 1.0;
    for (const auto& row : synthetic.rows) syn_counts[synthetic.label(sc, row)] += 1.0;

    const double n_orig = static_cast<double>(original.row_count());
    const double n_syn = static_cast<double>(synthetic.row_count());
    std::vector<double> expected, observed;
    double zero_e_observed = 0.0;
    for (const auto& cat : cats) {
      const double e = orig_counts[cat] / n_orig * n_syn;
      const double o = syn_counts[cat];
      if (e <= 0.0) {
        zero_e_observed += o;  // merged into the smallest positive-E cell
        continue;
      }
      expected.push_back(e);
      observed.push_back(o);
    }
    if (expected.empty()) fail_data("chi2: no expected counts for column '" + col.name + "'");
    if (zero_e_observed > 0.0) {
      std::size_t smallest = 0;
      for (std::size_t i = 1; i < expected.size(); ++i)
        if (expected[i] < expected[smallest]) smallest = i;
      observed[smallest] += zero_e_observed;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const double d = observed[i] - expected[i];
      stat += d * d / expected[i];
    }
    const double df = static_cast<double>(expected.size()) - 1.0;
    sum += df <= 0.0 ? 1.0 : chi2_sf(stat, df);
  }
  if (n_cols == 0) fail_data("chi2_avg_p: no categorical columns");
  return sum / static_cast<double>(n_cols);
}

double ks_avg_p(const DataTable& original, const DataTable& synthetic) {
  require_compatible(original, synthetic);
  double sum = 0.0;
  std::size_t n_cols = 0;
  for (const auto& col : original.schema.columns) {
    if (col.kind != ColumnKind::continuous) continue;
    ++n_cols;
    const std::size_t oc = original.schema.index_of(col.name);
    const std::size_t sc = synthetic.schema.index_of(col.name);
    std::vector<double> a, b;
    a.reserve(original.row_count());
    b.reserve(synthetic.row_count());
    for (const auto& row : original.rows) a.push_back(row[oc].num);
    for (const auto& row : synthetic.rows) b.push_back(row[sc].num);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      const double v = std::min(a[i], b[j]);
      while (i < a.size() && a[i] <= v) ++i;
      while (j < b.size() && b[j] <= v) ++j;
      d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    sum += kolmogorov_q(std::sqrt(ne) * d);
  }
  if (n_cols == 0) fail_data("ks_avg_p: no continuous columns");
  return sum / static_cast<double>(n_cols);
}

double ci_overlap(double lo_o, double hi_o, double lo_s, double hi_s) {
  const double overlap = std::min(hi_o, hi_s) - std::max(lo_o, lo_s);
  return 0.5 * (overlap / (hi_o - lo_o) + overlap / (hi_s - lo_s));
}

double standardized_difference(double beta_o, double beta_s, double se_o) {
  return std::abs(beta_o - beta_s) / se_o;
}

RegressionMetricsResult regression_metrics(const DataTable& original, const DataTable& synthetic,
                                           const std::string& target) {
  require_compatible(original, synthetic);
  const std::size_t oti = original.schema.index_of(target);
  const ColumnSpec& target_col = original.schema.columns[oti];
  if (target_col.kind != ColumnKind::discrete || target_col.categories.size() != 2)
    fail_data("regression metrics need a binary discrete target ('" + target + "')");

  FeatureCodec codec = FeatureCodec::fit(original, {target});
  const auto names = codec.feature_names();
  const auto drop = codec.reference_level_features();

  auto design = [&](const DataTable& t) {
    const Tensor full = codec.encode_table(t);
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < full.cols(); ++j)
      if (std::find(drop.begin(), drop.end(), j) == drop.end()) keep.push_back(j);
    Tensor x(full.rows(), keep.size());
    for (std::size_t r = 0; r < full.rows(); ++r)
      for (std::size_t j = 0; j < keep.size(); ++j) x.at(r, j) = full.at(r, keep[j]);
    return std::make_pair(x, keep);
  };
  auto labels = [&](const DataTable& t) {
    const std::size_t ti = t.schema.index_of(target);
    std::vector<std::int32_t> y(t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
      const std::string& label = t.label(ti, t.rows[r]);
      y[r] = label == target_col.categories[1] ? 1 : 0;
    }
    return y;
  };

  auto [xo, keep] = design(original);
  auto [xs, keep2] = design(synthetic);
  (void)keep2;
  LogisticFit fo = logistic_fit(xo, labels(original));
  LogisticFit fs = logistic_fit(xs, labels(synthetic));

  RegressionMetricsResult res;
  const double z = 1.959963984540054;  // 97.5% normal quantile
  double io_sum = 0.0, sd_sum = 0.0;
  std::size_t included = 0;
  for (std::size_t j = 0; j < fo.beta.size(); ++j) {
    CoefficientDetail d;
    d.name = j == 0 ? "intercept" : names[keep[j - 1]];
    d.beta_original = fo.beta[j];
    d.beta_synthetic = fs.beta[j];
    d.se_original = fo.se[j];
    d.se_synthetic = fs.se[j];
    const bool bad = !std::isfinite(d.se_original) || !std::isfinite(d.se_synthetic) ||
                     d.se_original <= 0.0 || d.se_synthetic <= 0.0 ||
                     std::abs(d.beta_original) > 30.0 || std::abs(d.beta_synthetic) > 30.0;
    if (bad) {
      d.excluded = true;
      res.excluded_count++;
      res.coefficients.push_back(d);
      continue;
    }
    const double lo_o = d.beta_original - z * d.se_original;
    const double hi_o = d.beta_original + z * d.se_original;
    const double lo_s = d.beta_synthetic - z * d.se_synthetic;
    const double hi_s = d.beta_synthetic + z * d.se_synthetic;
    d.ci_overlap = ci_overlap(lo_o, hi_o, lo_s, hi_s);
    d.std_diff = standardized_difference(d.beta_original, d.beta_synthetic, d.se_original);
    io_sum += d.ci_overlap;
    sd_sum += d.std_diff;
    ++included;
    res.coefficients.push_back(d);
  }
  if (included == 0) fail_data("regression metrics: every coefficient was excluded");
  res.ci_overlap_mean = io_sum / static_cast<double>(included);
  res.std_diff_mean = sd_sum / static_cast<double>(included);
  return res;
}

std::vector<PredictorSpec> default_utility_specs(std::uint64_t seed) {
  std::vector<PredictorSpec> specs;
  for (PredictorKind kind :
       {PredictorKind::random_forest, PredictorKind::knn, PredictorKind::cart,
        PredictorKind::linear_svm, PredictorKind::mlp}) {
    PredictorSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    specs.push_back(spec);
  }
  return specs;
}

ClassifierUtilityResult classifier_utility(const DataTable& original_train,
                                           const DataTable& synthetic_train,
                                           const DataTable& holdout,
                                           const std::vector<PredictorSpec>& specs,
                                           const std::string& target) {
  ClassifierUtilityResult res;
  double sum = 0.0, sq = 0.0;
  std::size_t counted = 0;
  for (const auto& spec : specs) {
    ClassifierUtilityEntry entry;
    entry.kind = spec.kind;
    try {
      FittedPredictor real = train_predictor(spec, original_train, target);
      FittedPredictor synth = train_predictor(spec, synthetic_train, target);
      entry.acc_real = real.accuracy(holdout, target);
      entry.acc_synth = synth.accuracy(holdout, target);
      entry.gap = entry.acc_real - entry.acc_synth;
      entry.flagged = real.flagged || synth.flagged;
    } catch (const Error&) {
      entry.flagged = true;  // e.g. class absent from one training table
      res.entries.push_back(entry);
      continue;
    }
    sum += entry.gap;
    sq += entry.gap * entry.gap;
    ++counted;
    res.entries.push_back(entry);
  }
  if (counted > 0) {
    res.mean_gap = sum / static_cast<double>(counted);
    const double var = sq / static_cast<double>(counted) - res.mean_gap * res.mean_gap;
    res.std_gap = std::sqrt(std::max(var, 0.0));
  }
  return res;
}

namespace {

nlohmann::json coefficient_to_json(const CoefficientDetail& d) {
  return {{"name", d.name},
          {"beta_original", d.beta_original},
          {"beta_synthetic", d.beta_synthetic},
          {"se_original", d.se_original},
          {"se_synthetic", d.se_synthetic},
          {"ci_overlap", d.ci_overlap},
          {"std_diff", d.std_diff},
          {"excluded", d.excluded}};
}

CoefficientDetail coefficient_from_json(const nlohmann::json& j) {
  CoefficientDetail d;
  d.name = j.at("name").get<std::string>();
  d.beta_original = j.at("beta_original").get<double>();
  d.beta_synthetic = j.at("beta_synthetic").get<double>();
  d.se_original = j.at("se_original").get<double>();
  d.se_synthetic = j.at("se_synthetic").get<double>();
  d.ci_overlap = j.at("ci_overlap").get<double>();
  d.std_diff = j.at("std_diff").get<double>();
  d.excluded = j.at("excluded").get<bool>();
  return d;
}

}  // namespace

void save_report(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["version"] = report.version;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("pmse", report.pmse);
  put("pmse_ratio", report.pmse_ratio);
  put("chi2_avg_p", report.chi2_avg_p);
  put("ks_avg_p", report.ks_avg_p);
  put("ci_overlap_mean", report.ci_overlap_mean);
  put("std_diff_mean", report.std_diff_mean);
  put("mean_gap", report.mean_gap);
  put("std_gap", report.std_gap);
  put("mia_accuracy", report.mia_accuracy);
  put("aia_accuracy", report.aia_accuracy);
  j["coefficients"] = nlohmann::json::array();
  for (const auto& d : report.coefficients) j["coefficients"].push_back(coefficient_to_json(d));
  j["classifiers"] = nlohmann::json::array();
  for (const auto& e : report.classifiers) {
    j["classifiers"].push_back({{"kind", predictor_kind_name(e.kind)},
                                {"acc_real", e.acc_real},
                                {"acc_synth", e.acc_synth},
                                {"gap", e.gap},
                                {"flagged", e.flagged}});
  }
  j["original_hash"] = report.original_hash;
  j["synthetic_hash"] = report.synthetic_hash;
  j["seed"] = report.seed;
  std::ofstream out(path);
  if (!out) fail_data("cannot write report '" + path + "'");
  out << j.dump(2) << '\n';
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open report '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail_data("report '" + path + "' is not valid JSON: " + e.what());
  }
  EvalReport rep;
  if (j.at("version").get<std::string>() != rep.version)
    fail_data("report version mismatch in '" + path + "'");
  auto get = [&j](const char* key) -> std::optional<double> {
    if (j.contains(key)) return j[key].get<double>();
    return std::nullopt;
  };
  rep.pmse = get("pmse");
  rep.pmse_ratio = get("pmse_ratio");
  rep.chi2_avg_p = get("chi2_avg_p");
  rep.ks_avg_p = get("ks_avg_p");
  rep.ci_overlap_mean = get("ci_overlap_mean");
  rep.std_diff_mean = get("std_diff_mean");
  rep.mean_gap = get("mean_gap");
  rep.std_gap = get("std_gap");
  rep.mia_accuracy = get("mia_accuracy");
  rep.aia_accuracy = get("aia_accuracy");
  for (const auto& jc : j.at("coefficients")) rep.coefficients.push_back(coefficient_from_json(jc));
  for (const auto& je : j.at("classifiers")) {
    ClassifierUtilityEntry e;
    const std::string kind = je.at("kind").get<std::string>();
    for (PredictorKind k : {PredictorKind::cart, PredictorKind::random_forest, PredictorKind::knn,
                            PredictorKind::linear_svm, PredictorKind::logistic_regression,
                            PredictorKind::mlp})
      if (predictor_kind_name(k) == kind) e.kind = k;
    e.acc_real = je.at("acc_real").get<double>();
    e.acc_synth = je.at("acc_synth").get<double>();
    e.gap = je.at("gap").get<double>();
    e.flagged = je.at("flagged").get<bool>();
    rep.classifiers.push_back(e);
  }
  rep.original_hash = j.at("original_hash").get<std::string>();
  rep.synthetic_hash = j.at("synthetic_hash").get<std::string>();
  rep.seed = j.at("seed").get<std::uint64_t>();
  return rep;
}

std::string report_summary(const EvalReport& report) {
  std::string out;
  char line[160];
  auto add = [&out, &line](const char* fmt, double v) {
    std::snprintf(line, sizeof(line), fmt, v);
    out += line;
  };
  if (report.pmse) add("pmse            %.6f\n", *report.pmse);
  if (report.pmse_ratio) add("pmse_ratio      %.4f\n", *report.pmse_ratio);
  if (report.chi2_avg_p) add("chi2_avg_p      %.4f\n", *report.chi2_avg_p);
  if (report.ks_avg_p) add("ks_avg_p        %.4f\n", *report.ks_avg_p);
  if (report.ci_overlap_mean) add("ci_overlap_mean %.4f\n", *report.ci_overlap_mean);
  if (report.std_diff_mean) add("std_diff_mean   %.4f\n", *report.std_diff_mean);
  for (const auto& e : report.classifiers) {
    std::snprintf(line, sizeof(line), "classifier %-20s real %.4f synth %.4f gap %+.4f%s\n",
                  predictor_kind_name(e.kind).c_str(), e.acc_real, e.acc_synth, e.gap,
                  e.flagged ? " [flagged]" : "");
    out += line;
  }
  if (report.mean_gap) add("mean_gap        %+.4f\n", *report.mean_gap);
  if (report.std_gap) add("std_gap         %.4f\n", *report.std_gap);
  if (report.mia_accuracy) add("mia_accuracy    %.4f\n", *report.mia_accuracy);
  if (report.aia_accuracy) add("aia_accuracy    %.4f\n", *report.aia_accuracy);
  return out;
}

EvalReport evaluate(const DataTable& original, const DataTable& synthetic,
                    const EvalOptions& options) {
  require_compatible(original, synthetic);
  EvalReport rep;
  rep.seed = options.seed;
  rep.original_hash = table_fingerprint(original);
  rep.synthetic_hash = table_fingerprint(synthetic);

  std::optional<std::string> target = options.target;
  if (!target && original.schema.target_column) target = original.schema.target_column;

  if (options.fidelity) {
    PmseResult pmse = pmse_score(original, synthetic, options.cart_depth, options.seed);
    rep.pmse = pmse.pmse;
    rep.pmse_ratio = pmse.ratio;
    bool any_discrete = false, any_continuous = false;
    for (const auto& col : original.schema.columns) {
      any_discrete |= col.kind == ColumnKind::discrete;
      any_continuous |= col.kind == ColumnKind::continuous;
    }
    if (any_discrete) rep.chi2_avg_p = chi2_avg_p(original, synthetic);
    if (any_continuous) rep.ks_avg_p = ks_avg_p(original, synthetic);

    if (target) {
      const ColumnSpec* tc = original.schema.find(*target);
      if (!tc) fail_config("--target names a column missing from the data: '" + *target + "'");
      if (tc->kind == ColumnKind::discrete && tc->categories.size() == 2) {
        RegressionMetricsResult reg = regression_metrics(original, synthetic, *target);
        rep.ci_overlap_mean = reg.ci_overlap_mean;
        rep.std_diff_mean = reg.std_diff_mean;
        rep.coefficients = reg.coefficients;
      }
    }
  }

  if (options.utility) {
    if (!target) fail_config("utility metrics need --target");
    auto [train, holdout] =
        split_train_holdout(original, options.holdout_fraction, Rng::derive(options.seed, "eval_holdout"));
    ClassifierUtilityResult util = classifier_utility(
        train, synthetic, holdout, default_utility_specs(options.seed), *target);
    rep.classifiers = util.entries;
    rep.mean_gap = util.mean_gap;
    rep.std_gap = util.std_gap;
  }
  return rep;
}

}  // namespace kipps
