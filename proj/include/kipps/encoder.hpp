#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kipps/rng.hpp"
#include "kipps/rules.hpp"
#include "kipps/schema.hpp"
#include "kipps/tensor.hpp"

namespace kipps {

struct GmmMode {
  double weight = 1.0;
  double mean = 0.0;
  double stdev = 1.0;
};

// Mode-specific normalization parameters of one continuous column:
// alpha = clamp((c - mean_k) / (4 stdev_k), -1, 1), beta = one-hot of k.
struct ContinuousEncoding {
  std::string column;
  std::vector<GmmMode> modes;
  bool degenerate = false;  // all input values identical
};

// Plain EM fit (k-means++ seeding, 100 iteration cap, 1e-6 log-likelihood
// tolerance); modes under `weight_threshold` are dropped and the remaining
// weights renormalized.
ContinuousEncoding fit_continuous_gmm(const std::vector<double>& values, std::size_t max_modes,
                                      double weight_threshold, std::uint64_t seed);

std::vector<ContinuousEncoding> fit_table_encodings(const DataTable& masked,
                                                    std::size_t max_modes, double weight_threshold,
                                                    std::uint64_t seed);

enum class SegmentKind { alpha, beta, discrete_onehot, mask_onehot, rule_flag_onehot };

struct Segment {
  std::string id;
  std::string source;  // column name or rule id
  SegmentKind kind = SegmentKind::discrete_onehot;
  std::size_t width = 0;
  std::size_t offset = 0;  // column offset within the encoded row
};

// Concatenation order: (alpha_i, beta_i) pairs in schema order, then
// discrete one-hots, then mask one-hots, then rule flags.
struct RowEncodingLayout {
  std::vector<Segment> segments;
  std::size_t total_width = 0;

  std::vector<std::size_t> selectable;     // segment indices eligible as cond targets
  std::vector<std::size_t> cond_offsets;   // per selectable segment, offset in the cond vector
  std::size_t cond_width = 0;

  const Segment& segment(std::size_t i) const { return segments[i]; }
  // Index into `selectable` for a column/rule name; -1 if not selectable.
  int selectable_for_source(const std::string& source) const;
  bool is_categorical(std::size_t segment_index) const;  // everything except alpha
};

RowEncodingLayout build_layout(const TableSchema& masked_schema,
                               const std::vector<ContinuousEncoding>& encodings,
                               const RuleSet& rules);

const ContinuousEncoding* encoding_for(const std::vector<ContinuousEncoding>& encodings,
                                       const std::string& column);

// One-hot selector of a single (selectable segment, category) pair.
struct CondVector {
  std::size_t selectable_index = 0;  // index into layout.selectable
  std::int32_t category = 0;
  std::size_t flat_index = 0;  // within [0, cond_width)
};

CondVector make_cond(const RowEncodingLayout& layout, std::size_t selectable_index,
                     std::int32_t category);
CondSelection cond_selection(const RowEncodingLayout& layout, const CondVector& cond);

std::vector<double> encode_row(const Row& row, const TableSchema& masked_schema,
                               const RowEncodingLayout& layout,
                               const std::vector<ContinuousEncoding>& encodings,
                               const RuleSet& rules, std::uint64_t seed);

// Per-row seeds derive from (seed, row index).
Tensor encode_table(const DataTable& masked, const RowEncodingLayout& layout,
                    const std::vector<ContinuousEncoding>& encodings, const RuleSet& rules,
                    std::uint64_t seed);

// Inverse map back to the original (unmasked) column vocabulary, as text
// cells in `original_schema` order. Soft one-hots are hardened by argmax;
// mask groups are materialized through decode_mask; rule segments dropped.
std::vector<std::string> decode_row(std::span<const double> encoded,
                                    const TableSchema& masked_schema,
                                    const RowEncodingLayout& layout,
                                    const std::vector<ContinuousEncoding>& encodings,
                                    const RuleSet& rules, const TableSchema& original_schema,
                                    std::uint64_t seed);

// Training-by-sampling: segment uniform over selectable segments, category
// with probability proportional to log(1 + count), paired row uniform among
// the rows matching the selection.
class CondSampler {
 public:
  static CondSampler build(const DataTable& masked, const RuleSet& rules,
                           const RowEncodingLayout& layout);
  static CondSampler from_counts(const RowEncodingLayout& layout,
                                 std::vector<std::vector<std::int64_t>> counts);

  CondVector sample(const RowEncodingLayout& layout, Rng& rng) const;
  std::pair<CondVector, std::size_t> sample_with_row(const RowEncodingLayout& layout,
                                                     Rng& rng) const;
  // Cond matching a concrete encoded row (the DP batch path).
  CondVector cond_from_encoded_row(const RowEncodingLayout& layout,
                                   std::span<const double> encoded_row, Rng& rng) const;

  const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }
  bool has_rows() const { return !rows_.empty(); }

 private:
  // Indexed per selectable segment.
  std::vector<std::vector<std::int64_t>> counts_;
  std::vector<std::vector<double>> log_weights_;
  std::vector<std::vector<std::vector<std::size_t>>> rows_;  // matching row ids
};

}  // namespace kipps
