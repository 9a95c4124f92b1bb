#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "kipps/schema.hpp"

namespace kipps {

struct AttackConfig {
  std::string sensitive_column;   // aia
  std::size_t member_size = 200;  // mia: members == non-members
  int shadow_count = 3;           // mia
  std::uint64_t seed = 0;

  void validate() const;
};

// Trains on the given member table, returns a synthetic table.
using SynthesizerFn = std::function<DataTable(const DataTable& members, std::uint64_t seed)>;

// Shadow-model membership inference: the target synthesizer is trained on a
// member set; per-candidate features are distance-to-closest-record against
// the synthetic set plus a CART confidence, and the attack classifier is
// calibrated on shadow synthesizers trained on disjoint pools. Returns
// balanced accuracy over held-out members/non-members (0.5 = resilient).
double membership_inference(const AttackConfig& config, const SynthesizerFn& synthesize,
                            const DataTable& population);

// CART trained on synthetic data predicts the sensitive column of original
// rows from the remaining columns; returns that accuracy (lower = stronger).
double attribute_inference(const AttackConfig& config, const DataTable& synthetic,
                           const DataTable& original, const std::string& sensitive);

}  // namespace kipps
