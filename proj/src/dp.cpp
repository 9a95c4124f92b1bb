#include "kipps/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kipps/error.hpp"
#include "kipps/tensor.hpp"

namespace kipps {

void DpConfig::validate() const {
  if (!(clip_norm > 0.0)) fail_config("dp: clip norm must be positive");
  if (!(noise_multiplier > 0.0)) fail_config("dp: noise multiplier must be positive");
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) fail_config("dp: sampling rate in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) fail_config("dp: delta in (0,1)");
  if (epsilon_ceiling && !(*epsilon_ceiling > 0.0)) fail_config("dp: epsilon ceiling must be positive");
}

std::vector<double> default_rdp_orders() {
  std::vector<double> orders{1.25, 1.5, 1.75};
  for (int a = 2; a <= 64; ++a) orders.push_back(a);
  orders.push_back(128.0);
  orders.push_back(256.0);
  return orders;
}

AccountantState make_accountant(std::vector<double> orders) {
  AccountantState st;
  st.orders = std::move(orders);
  st.accumulated_rdp.assign(st.orders.size(), 0.0);
  return st;
}

ClippedGradient clip_per_example(const std::vector<double>& g, double clip_norm) {
  if (!(clip_norm > 0.0)) fail_config("clip_per_example: clip norm must be positive");
  ClippedGradient out;
  out.original_norm = l2_norm(g);
  out.scale = 1.0 / std::max(1.0, out.original_norm / clip_norm);
  out.vector.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.vector[i] = g[i] * out.scale;
  return out;
}

std::vector<double> aggregate_noisy(const std::vector<std::vector<double>>& clipped,
                                    double clip_norm, double sigma, std::uint64_t seed) {
  if (clipped.empty()) fail_data("aggregate_noisy: empty batch");
  const std::size_t dim = clipped.front().size();
  for (const auto& g : clipped)
    if (g.size() != dim) fail_data("aggregate_noisy: inconsistent gradient sizes");

  std::vector<double> sum(dim, 0.0);
  for (const auto& g : clipped)
    for (std::size_t i = 0; i < dim; ++i) sum[i] += g[i];

  Rng rng = Rng::substream(seed, "dp_noise");
  const double scale = sigma * clip_norm;
  const double inv_l = 1.0 / static_cast<double>(clipped.size());
  for (std::size_t i = 0; i < dim; ++i) sum[i] = (sum[i] + scale * rng.normal()) * inv_l;
  return sum;
}

namespace {

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::max();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// log((1-q) + q e^t) computed stably.
double log_mix(double log_1mq, double log_q, double t) {
  const double a = log_1mq;
  const double b = log_q + t;
  const double mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

// Integer order: log A = logsumexp_k [ logC(a,k) + (a-k) log(1-q) + k log q + k(k-1)/(2 s^2) ]
double rdp_integer_order(double q, double sigma, int alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(alpha) + 1);
  for (int k = 0; k <= alpha; ++k) {
    terms.push_back(log_binomial(alpha, k) + (alpha - k) * log_1mq + k * log_q +
                    (static_cast<double>(k) * (k - 1)) / (2.0 * sigma * sigma));
  }
  return log_sum_exp(terms) / (alpha - 1.0);
}

// Fractional order: A = E_{x ~ N(0, s^2)} [ ((1-q) + q e^{(2x-1)/(2 s^2)})^alpha ],
// integrated with composite Gauss-Legendre panels in log space.
double rdp_fractional_order(double q, double sigma, double alpha) {
  static const double kNodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
  static const double kWeights[8] = {0.1012285362903763, 0.2223810344533745,
                                     0.3137066458778873, 0.3626837833783620,
                                     0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double s2 = sigma * sigma;
  const double lo = -40.0 * sigma - 1.0;
  const double hi = 40.0 * sigma + alpha + 1.0;
  const double panel = sigma / 4.0;
  const auto n_panels = static_cast<std::size_t>(std::ceil((hi - lo) / panel));

  auto log_f = [&](double x) {
    const double log_gauss = -x * x / (2.0 * s2) - std::log(sigma) -
                             0.5 * std::log(2.0 * 3.14159265358979323846);
    return log_gauss + alpha * log_mix(log_1mq, log_q, (2.0 * x - 1.0) / (2.0 * s2));
  };

  // shifted accumulation: track max log integrand over all evaluations first
  std::vector<double> logs;
  logs.reserve(n_panels * 8);
  std::vector<double> ws;
  ws.reserve(n_panels * 8);
  for (std::size_t p = 0; p < n_panels; ++p) {
    const double a = lo + static_cast<double>(p) * panel;
    const double b = std::min(a + panel, hi);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < 8; ++i) {
      logs.push_back(log_f(mid + half * kNodes[i]));
      ws.push_back(half * kWeights[i]);
    }
  }
  double mx = -std::numeric_limits<double>::max();
  for (double l : logs) mx = std::max(mx, l);
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) acc += ws[i] * std::exp(logs[i] - mx);
  const double log_a = mx + std::log(acc);
  return log_a / (alpha - 1.0);
}

}  // namespace

double rdp_subsampled_gaussian(double q, double sigma, double alpha) {
  if (!(alpha > 1.0)) fail_config("rdp: order must exceed 1");
  if (!(sigma > 0.0)) fail_config("rdp: sigma must be positive");
  if (q < 0.0 || q > 1.0) fail_config("rdp: q must lie in [0,1]");
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  double value;
  if (std::abs(alpha - std::round(alpha)) < 1e-12 && alpha <= 4096.0) {
    value = rdp_integer_order(q, sigma, static_cast<int>(std::llround(alpha)));
  } else {
    value = rdp_fractional_order(q, sigma, alpha);
  }
  return std::max(value, 0.0);
}

void account_step(AccountantState& state, double q, double sigma) {
  if (state.orders.size() != state.accumulated_rdp.size())
    fail_data("accountant state is inconsistent");
  for (std::size_t i = 0; i < state.orders.size(); ++i)
    state.accumulated_rdp[i] += rdp_subsampled_gaussian(q, sigma, state.orders[i]);
  state.steps += 1;
}

EpsilonReport report_epsilon(const AccountantState& state, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail_config("report_epsilon: delta in (0,1)");
  EpsilonReport rep;
  if (state.steps == 0) {
    rep.no_steps = true;
    rep.epsilon = 0.0;
    rep.order = state.orders.empty() ? 0.0 : state.orders.back();
    return rep;
  }
  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::max();
  double best_order = 0.0;
  for (std::size_t i = 0; i < state.orders.size(); ++i) {
    const double eps = state.accumulated_rdp[i] + log_inv_delta / (state.orders[i] - 1.0);
    if (eps < best) {
      best = eps;
      best_order = state.orders[i];
    }
  }
  rep.epsilon = best;
  rep.order = best_order;
  return rep;
}

double solve_sigma_for_epsilon(double q, std::int64_t steps, double delta,
                               double epsilon_target) {
  if (steps <= 0) fail_config("solve_sigma: steps must be positive");
  if (!(epsilon_target > 0.0)) fail_config("solve_sigma: epsilon target must be positive");
  auto eps_for = [&](double sigma) {
    AccountantState st = make_accountant();
    for (std::size_t i = 0; i < st.orders.size(); ++i)
      st.accumulated_rdp[i] = static_cast<double>(steps) * rdp_subsampled_gaussian(q, sigma, st.orders[i]);
    st.steps = steps;
    return report_epsilon(st, delta).epsilon;
  };

  double lo = 0.3, hi = 1.0;
  while (eps_for(hi) > epsilon_target) {
    hi *= 2.0;
    if (hi > 1e4) fail_config("solve_sigma: target epsilon unreachable");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eps_for(mid) > epsilon_target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace kipps
