#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kipps/rng.hpp"

namespace kipps {

struct DpConfig {
  double clip_norm = 1.0;        // C
  double noise_multiplier = 1.0; // sigma
  double sampling_rate = 0.01;   // q, derived as batch / rows when unset by the caller
  double delta = 1e-5;
  std::optional<double> epsilon_ceiling;

  void validate() const;  // throws Errc::config
};

struct AccountantState {
  std::vector<double> orders;
  std::vector<double> accumulated_rdp;  // per order, nonnegative, nondecreasing
  std::int64_t steps = 0;
};

// Integers 2..64 plus {1.25, 1.5, 1.75, 128, 256}.
std::vector<double> default_rdp_orders();
AccountantState make_accountant(std::vector<double> orders = default_rdp_orders());

struct ClippedGradient {
  std::vector<double> vector;
  double original_norm = 0.0;
  double scale = 1.0;  // applied factor, min(1, C / norm)
};

// g / max(1, |g|_2 / C)
ClippedGradient clip_per_example(const std::vector<double>& g, double clip_norm);

// (1/L) (sum_i clipped_i + N(0, sigma^2 C^2 I)); L = clipped.size().
std::vector<double> aggregate_noisy(const std::vector<std::vector<double>>& clipped,
                                    double clip_norm, double sigma, std::uint64_t seed);

// Renyi DP of one Poisson-subsampled Gaussian step at order alpha (> 1).
// q = 1 reduces to the Gaussian mechanism alpha / (2 sigma^2); integer
// orders use the binomial expansion, fractional orders numeric integration.
double rdp_subsampled_gaussian(double q, double sigma, double alpha);

void account_step(AccountantState& state, double q, double sigma);

struct EpsilonReport {
  double epsilon = 0.0;
  double order = 0.0;
  bool no_steps = false;
};

// epsilon = min over orders of rdp(alpha) + log(1/delta) / (alpha - 1).
EpsilonReport report_epsilon(const AccountantState& state, double delta);

// Smallest sigma (by bisection over the accountant) whose epsilon after
// `steps` steps stays at or below the target.
double solve_sigma_for_epsilon(double q, std::int64_t steps, double delta, double epsilon_target);

}  // namespace kipps
