#include "kipps/encoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "kipps/error.hpp"

namespace kipps {

namespace {

constexpr double kStdevFloor = 1e-6;
constexpr double kPi = 3.14159265358979323846;

double log_normal_pdf(double x, double mean, double stdev) {
  const double z = (x - mean) / stdev;
  return -0.5 * z * z - std::log(stdev) - 0.5 * std::log(2.0 * kPi);
}

// k-means++ style seeding over the raw values.
std::vector<double> seed_means(const std::vector<double>& values, std::size_t k, Rng& rng) {
  std::vector<double> means;
  means.push_back(values[rng.uniform_index(values.size())]);
  std::vector<double> d2(values.size());
  while (means.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      for (double m : means) best = std::min(best, (values[i] - m) * (values[i] - m));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      means.push_back(values[rng.uniform_index(values.size())]);
      continue;
    }
    double r = rng.uniform() * total;
    std::size_t pick = values.size() - 1;
    for (std::size_t i = 0; i < values.size(); ++i) {
      r -= d2[i];
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
    means.push_back(values[pick]);
  }
  return means;
}

}  // namespace

namespace {

struct EmFit {
  std::vector<GmmMode> modes;
  double loglik = 0.0;
};

EmFit em_fit(const std::vector<double>& values, std::size_t k, double stdev_floor, Rng rng) {
  const std::size_t n = values.size();
  std::vector<double> means = seed_means(values, k, rng);
  double mean_all = 0.0;
  for (double v : values) mean_all += v;
  mean_all /= static_cast<double>(n);
  double var_all = 0.0;
  for (double v : values) var_all += (v - mean_all) * (v - mean_all);
  const double std_all = std::max(std::sqrt(var_all / static_cast<double>(n)), stdev_floor);

  std::vector<double> stdevs(k, std_all);
  std::vector<double> weights(k, 1.0 / static_cast<double>(k));
  std::vector<double> resp(n * k);
  double ll = -std::numeric_limits<double>::max();
  double prev_ll = ll;
  for (int iter = 0; iter < 100; ++iter) {
    ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::max();
      for (std::size_t j = 0; j < k; ++j) {
        resp[i * k + j] = (weights[j] > 0.0 ? std::log(weights[j]) : -1e300) +
                          log_normal_pdf(values[i], means[j], stdevs[j]);
        mx = std::max(mx, resp[i * k + j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) denom += std::exp(resp[i * k + j] - mx);
      ll += mx + std::log(denom);
      for (std::size_t j = 0; j < k; ++j)
        resp[i * k + j] = std::exp(resp[i * k + j] - mx) / denom;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double nj = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nj += resp[i * k + j];
        sum += resp[i * k + j] * values[i];
      }
      if (nj < 1e-12) {
        weights[j] = 0.0;
        continue;
      }
      means[j] = sum / nj;
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sq += resp[i * k + j] * (values[i] - means[j]) * (values[i] - means[j]);
      stdevs[j] = std::max(std::sqrt(sq / nj), stdev_floor);
      weights[j] = nj / static_cast<double>(n);
    }
    if (std::abs(ll / static_cast<double>(n) - prev_ll) < 1e-6) break;
    prev_ll = ll / static_cast<double>(n);
  }

  EmFit fit;
  fit.loglik = ll;
  for (std::size_t j = 0; j < k; ++j)
    if (weights[j] > 0.0) fit.modes.push_back({weights[j], means[j], stdevs[j]});
  return fit;
}

}  // namespace

ContinuousEncoding fit_continuous_gmm(const std::vector<double>& values, std::size_t max_modes,
                                      double weight_threshold, std::uint64_t seed) {
  if (values.empty()) fail_data("fit_continuous_gmm: empty values");
  if (max_modes < 1) fail_data("fit_continuous_gmm: max_modes must be >= 1");

  std::set<double> distinct(values.begin(), values.end());
  ContinuousEncoding enc;
  if (distinct.size() < 2) {
    enc.modes.push_back({1.0, values.front(), kStdevFloor});
    enc.degenerate = true;
    return enc;
  }

  const std::size_t n = values.size();
  const std::size_t k_max = std::min<std::size_t>(max_modes, distinct.size());

  // spike guard: bounds the collapse-on-a-repeated-value likelihood blowup
  double mean_all = 0.0;
  for (double v : values) mean_all += v;
  mean_all /= static_cast<double>(n);
  double var_all = 0.0;
  for (double v : values) var_all += (v - mean_all) * (v - mean_all);
  const double stdev_floor =
      std::max(kStdevFloor, 1e-2 * std::sqrt(var_all / static_cast<double>(n)));

  // plain EM per component count, count selected by BIC
  EmFit best;
  double best_bic = std::numeric_limits<double>::max();
  for (std::size_t k = 1; k <= k_max; ++k) {
    EmFit fit = em_fit(values, k, stdev_floor, Rng::substream(seed, "gmm_fit", k));
    const double params = 3.0 * static_cast<double>(k) - 1.0;
    const double bic = -2.0 * fit.loglik + params * std::log(static_cast<double>(n));
    if (bic < best_bic - 1e-9) {
      best_bic = bic;
      best = std::move(fit);
    }
  }

  for (const auto& m : best.modes)
    if (m.weight >= weight_threshold) enc.modes.push_back(m);
  if (enc.modes.empty()) {
    std::size_t top = 0;
    for (std::size_t j = 1; j < best.modes.size(); ++j)
      if (best.modes[j].weight > best.modes[top].weight) top = j;
    enc.modes.push_back(best.modes[top]);
  }
  double total = 0.0;
  for (const auto& m : enc.modes) total += m.weight;
  for (auto& m : enc.modes) m.weight /= total;
  std::sort(enc.modes.begin(), enc.modes.end(),
            [](const GmmMode& a, const GmmMode& b) { return a.mean < b.mean; });
  return enc;
}

std::vector<ContinuousEncoding> fit_table_encodings(const DataTable& masked,
                                                    std::size_t max_modes, double weight_threshold,
                                                    std::uint64_t seed) {
  std::vector<ContinuousEncoding> out;
  for (std::size_t c = 0; c < masked.schema.column_count(); ++c) {
    const ColumnSpec& col = masked.schema.columns[c];
    if (col.kind != ColumnKind::continuous) continue;
    std::vector<double> values;
    values.reserve(masked.row_count());
    for (const auto& row : masked.rows) values.push_back(row[c].num);
    ContinuousEncoding enc =
        fit_continuous_gmm(values, max_modes, weight_threshold, Rng::derive(seed, col.name));
    enc.column = col.name;
    out.push_back(std::move(enc));
  }
  return out;
}

const ContinuousEncoding* encoding_for(const std::vector<ContinuousEncoding>& encodings,
                                       const std::string& column) {
  for (const auto& e : encodings)
    if (e.column == column) return &e;
  return nullptr;
}

int RowEncodingLayout::selectable_for_source(const std::string& source) const {
  for (std::size_t i = 0; i < selectable.size(); ++i)
    if (segments[selectable[i]].source == source) return static_cast<int>(i);
  return -1;
}

bool RowEncodingLayout::is_categorical(std::size_t segment_index) const {
  return segments[segment_index].kind != SegmentKind::alpha;
}

RowEncodingLayout build_layout(const TableSchema& masked_schema,
                               const std::vector<ContinuousEncoding>& encodings,
                               const RuleSet& rules) {
  RowEncodingLayout layout;
  auto push = [&layout](Segment s) {
    s.offset = layout.total_width;
    layout.total_width += s.width;
    layout.segments.push_back(std::move(s));
  };

  for (const auto& col : masked_schema.columns) {
    if (col.kind != ColumnKind::continuous) continue;
    const ContinuousEncoding* enc = encoding_for(encodings, col.name);
    if (!enc) fail_data("build_layout: no encoding fitted for column '" + col.name + "'");
    if (enc->modes.empty()) fail_data("build_layout: encoding for '" + col.name + "' has no modes");
    push({"alpha:" + col.name, col.name, SegmentKind::alpha, 1, 0});
    push({"beta:" + col.name, col.name, SegmentKind::beta, enc->modes.size(), 0});
  }
  for (const auto& col : masked_schema.columns) {
    if (col.kind != ColumnKind::discrete || rules.find_map(col.name)) continue;
    if (col.categories.empty())
      fail_data("build_layout: discrete column '" + col.name + "' has no categories");
    push({"d:" + col.name, col.name, SegmentKind::discrete_onehot, col.categories.size(), 0});
  }
  for (const auto& col : masked_schema.columns) {
    if (col.kind != ColumnKind::discrete || !rules.find_map(col.name)) continue;
    push({"f:" + col.name, col.name, SegmentKind::mask_onehot, col.categories.size(), 0});
  }
  for (const auto& rule : rules.rules)
    push({"r:" + rule.id, rule.id, SegmentKind::rule_flag_onehot, 2, 0});

  for (std::size_t i = 0; i < layout.segments.size(); ++i) {
    const SegmentKind k = layout.segments[i].kind;
    if (k == SegmentKind::discrete_onehot || k == SegmentKind::mask_onehot ||
        k == SegmentKind::rule_flag_onehot) {
      layout.selectable.push_back(i);
      layout.cond_offsets.push_back(layout.cond_width);
      layout.cond_width += layout.segments[i].width;
    }
  }
  return layout;
}

CondVector make_cond(const RowEncodingLayout& layout, std::size_t selectable_index,
                     std::int32_t category) {
  if (selectable_index >= layout.selectable.size()) fail_data("make_cond: bad segment");
  const Segment& seg = layout.segments[layout.selectable[selectable_index]];
  if (category < 0 || static_cast<std::size_t>(category) >= seg.width)
    fail_data("make_cond: category out of range for segment '" + seg.id + "'");
  CondVector cv;
  cv.selectable_index = selectable_index;
  cv.category = category;
  cv.flat_index = layout.cond_offsets[selectable_index] + static_cast<std::size_t>(category);
  return cv;
}

CondSelection cond_selection(const RowEncodingLayout& layout, const CondVector& cond) {
  const Segment& seg = layout.segments[layout.selectable[cond.selectable_index]];
  return CondSelection{seg.source, cond.category};
}

std::vector<double> encode_row(const Row& row, const TableSchema& masked_schema,
                               const RowEncodingLayout& layout,
                               const std::vector<ContinuousEncoding>& encodings,
                               const RuleSet& rules, std::uint64_t seed) {
  std::vector<double> out(layout.total_width, 0.0);
  Rng rng = Rng::substream(seed, "encode_row");
  const auto flags = evaluate_rules(row, masked_schema, rules);

  for (const auto& seg : layout.segments) {
    switch (seg.kind) {
      case SegmentKind::alpha: {
        // handled with the paired beta
        break;
      }
      case SegmentKind::beta: {
        const std::size_t ci = masked_schema.index_of(seg.source);
        const double c = row[ci].num;
        const ContinuousEncoding* enc = encoding_for(encodings, seg.source);
        std::vector<double> post(enc->modes.size());
        double mx = -std::numeric_limits<double>::max();
        for (std::size_t j = 0; j < enc->modes.size(); ++j) {
          post[j] = std::log(enc->modes[j].weight) +
                    log_normal_pdf(c, enc->modes[j].mean, enc->modes[j].stdev);
          mx = std::max(mx, post[j]);
        }
        double denom = 0.0;
        for (auto& p : post) {
          p = std::exp(p - mx);
          denom += p;
        }
        for (auto& p : post) p /= denom;
        const std::size_t k = rng.categorical(post);
        out[seg.offset + k] = 1.0;
        const double alpha =
            (c - enc->modes[k].mean) / (4.0 * enc->modes[k].stdev);
        out[seg.offset - 1] = std::clamp(alpha, -1.0, 1.0);  // alpha precedes beta
        break;
      }
      case SegmentKind::discrete_onehot:
      case SegmentKind::mask_onehot: {
        const std::size_t ci = masked_schema.index_of(seg.source);
        const auto cat = static_cast<std::size_t>(row[ci].cat);
        if (cat >= seg.width) fail_data("encode_row: category out of range in '" + seg.source + "'");
        out[seg.offset + cat] = 1.0;
        break;
      }
      case SegmentKind::rule_flag_onehot: {
        std::size_t k = 0;
        for (; k < rules.rules.size(); ++k)
          if (rules.rules[k].id == seg.source) break;
        if (k == rules.rules.size()) fail_data("encode_row: unknown rule '" + seg.source + "'");
        out[seg.offset + (flags[k] ? 1 : 0)] = 1.0;
        break;
      }
    }
  }
  return out;
}

Tensor encode_table(const DataTable& masked, const RowEncodingLayout& layout,
                    const std::vector<ContinuousEncoding>& encodings, const RuleSet& rules,
                    std::uint64_t seed) {
  Tensor out(masked.row_count(), layout.total_width);
  for (std::size_t r = 0; r < masked.row_count(); ++r) {
    const auto enc = encode_row(masked.rows[r], masked.schema, layout, encodings, rules,
                                Rng::derive(seed, "row", r));
    std::copy(enc.begin(), enc.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * layout.total_width));
  }
  return out;
}

namespace {

std::size_t argmax_span(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::string format_double_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::vector<std::string> decode_row(std::span<const double> encoded,
                                    const TableSchema& masked_schema,
                                    const RowEncodingLayout& layout,
                                    const std::vector<ContinuousEncoding>& encodings,
                                    const RuleSet& rules, const TableSchema& original_schema,
                                    std::uint64_t seed) {
  if (encoded.size() != layout.total_width) fail_data("decode_row: width mismatch");

  std::vector<std::string> out(original_schema.column_count());
  Rng rng = Rng::substream(seed, "decode_row");
  for (std::size_t oc = 0; oc < original_schema.column_count(); ++oc) {
    const ColumnSpec& col = original_schema.columns[oc];
    if (col.kind == ColumnKind::continuous) {
      const Segment* alpha = nullptr;
      const Segment* beta = nullptr;
      for (const auto& seg : layout.segments) {
        if (seg.source != col.name) continue;
        if (seg.kind == SegmentKind::alpha) alpha = &seg;
        if (seg.kind == SegmentKind::beta) beta = &seg;
      }
      if (!alpha || !beta) fail_data("decode_row: no segments for column '" + col.name + "'");
      const ContinuousEncoding* enc = encoding_for(encodings, col.name);
      const std::size_t k = argmax_span(encoded.subspan(beta->offset, beta->width));
      const double a = std::clamp(encoded[alpha->offset], -1.0, 1.0);
      out[oc] = format_double_text(a * 4.0 * enc->modes[k].stdev + enc->modes[k].mean);
      continue;
    }
    // Discrete: either a plain column or the source of a property map.
    const PropertyMap* map = nullptr;
    for (const auto& m : rules.property_maps)
      if (m.source_column == col.name) map = &m;
    const std::string segment_source = map ? map->name : col.name;
    const Segment* seg = nullptr;
    for (const auto& s : layout.segments) {
      if (s.source == segment_source &&
          (s.kind == SegmentKind::discrete_onehot || s.kind == SegmentKind::mask_onehot)) {
        seg = &s;
        break;
      }
    }
    if (!seg) fail_data("decode_row: no segment for column '" + col.name + "'");
    const std::size_t cat = argmax_span(encoded.subspan(seg->offset, seg->width));
    if (map) {
      const std::string& label = map->groups[cat].label;
      out[oc] = decode_mask(label, *map, rng.next_u64());
    } else {
      const ColumnSpec* masked_col = masked_schema.find(col.name);
      if (!masked_col) fail_data("decode_row: column '" + col.name + "' missing from masked schema");
      out[oc] = masked_col->categories.at(cat);
    }
  }
  return out;
}

CondSampler CondSampler::build(const DataTable& masked, const RuleSet& rules,
                               const RowEncodingLayout& layout) {
  CondSampler s;
  s.counts_.resize(layout.selectable.size());
  s.rows_.resize(layout.selectable.size());
  for (std::size_t i = 0; i < layout.selectable.size(); ++i) {
    const Segment& seg = layout.segments[layout.selectable[i]];
    s.counts_[i].assign(seg.width, 0);
    s.rows_[i].assign(seg.width, {});
  }

  for (std::size_t r = 0; r < masked.row_count(); ++r) {
    const Row& row = masked.rows[r];
    const auto flags = evaluate_rules(row, masked.schema, rules);
    for (std::size_t i = 0; i < layout.selectable.size(); ++i) {
      const Segment& seg = layout.segments[layout.selectable[i]];
      std::size_t cat = 0;
      if (seg.kind == SegmentKind::rule_flag_onehot) {
        std::size_t k = 0;
        for (; k < rules.rules.size(); ++k)
          if (rules.rules[k].id == seg.source) break;
        cat = flags[k] ? 1 : 0;
      } else {
        cat = static_cast<std::size_t>(row[masked.schema.index_of(seg.source)].cat);
      }
      s.counts_[i][cat]++;
      s.rows_[i][cat].push_back(r);
    }
  }
  for (const auto& c : s.counts_) {
    std::vector<double> w(c.size());
    for (std::size_t j = 0; j < c.size(); ++j)
      w[j] = c[j] > 0 ? std::log1p(static_cast<double>(c[j])) : 0.0;
    s.log_weights_.push_back(std::move(w));
  }
  return s;
}

CondSampler CondSampler::from_counts(const RowEncodingLayout& layout,
                                     std::vector<std::vector<std::int64_t>> counts) {
  if (counts.size() != layout.selectable.size()) fail_data("cond counts do not match layout");
  CondSampler s;
  s.counts_ = std::move(counts);
  for (const auto& c : s.counts_) {
    std::vector<double> w(c.size());
    for (std::size_t j = 0; j < c.size(); ++j)
      w[j] = c[j] > 0 ? std::log1p(static_cast<double>(c[j])) : 0.0;
    s.log_weights_.push_back(std::move(w));
  }
  return s;
}

CondVector CondSampler::sample(const RowEncodingLayout& layout, Rng& rng) const {
  const std::size_t seg = rng.uniform_index(counts_.size());
  const std::size_t cat = rng.categorical(log_weights_[seg]);
  return make_cond(layout, seg, static_cast<std::int32_t>(cat));
}

std::pair<CondVector, std::size_t> CondSampler::sample_with_row(const RowEncodingLayout& layout,
                                                                Rng& rng) const {
  if (rows_.empty()) fail_data("cond sampler has no row index (rebuilt from counts only)");
  CondVector cv = sample(layout, rng);
  const auto& matching = rows_[cv.selectable_index][static_cast<std::size_t>(cv.category)];
  if (matching.empty()) fail_data("cond sampler selected a category with no matching rows");
  return {cv, matching[rng.uniform_index(matching.size())]};
}

CondVector CondSampler::cond_from_encoded_row(const RowEncodingLayout& layout,
                                              std::span<const double> encoded_row,
                                              Rng& rng) const {
  const std::size_t i = rng.uniform_index(layout.selectable.size());
  const Segment& seg = layout.segments[layout.selectable[i]];
  const std::size_t cat = argmax_span(encoded_row.subspan(seg.offset, seg.width));
  return make_cond(layout, i, static_cast<std::int32_t>(cat));
}

}  // namespace kipps
