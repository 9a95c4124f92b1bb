#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kipps/dp.hpp"
#include "kipps/error.hpp"
#include "kipps/tensor.hpp"
#include "test_support.hpp"

using namespace kipps;
using kipps::testing::sgm_rdp_oracle;

TEST_CASE("clip_per_example follows g / max(1, |g|/C)") {
  std::vector<double> g{4.0, 0.0, 0.0};
  auto clipped = clip_per_example(g, 1.0);
  CHECK(clipped.original_norm == doctest::Approx(4.0));
  CHECK(clipped.vector[0] == doctest::Approx(1.0));
  CHECK(l2_norm(clipped.vector) == doctest::Approx(1.0));

  std::vector<double> small{0.3, 0.4, 0.0};  // norm 0.5
  auto kept = clip_per_example(small, 1.0);
  CHECK(kept.vector == small);
  CHECK(kept.scale == doctest::Approx(1.0));

  std::vector<double> zero{0.0, 0.0};
  auto z = clip_per_example(zero, 1.0);
  CHECK(z.vector == zero);
}

TEST_CASE("aggregate_noisy: zero sigma gives plain clipped mean, seeded determinism") {
  std::vector<std::vector<double>> clipped{{1.0, 2.0}, {3.0, 4.0}};
  auto mean = aggregate_noisy(clipped, 1.0, 0.0, 7);
  CHECK(mean[0] == doctest::Approx(2.0));
  CHECK(mean[1] == doctest::Approx(3.0));

  auto a = aggregate_noisy(clipped, 1.0, 1.5, 99);
  auto b = aggregate_noisy(clipped, 1.0, 1.5, 99);
  CHECK(a == b);
  auto c = aggregate_noisy(clipped, 1.0, 1.5, 100);
  CHECK(a != c);
}

TEST_CASE("aggregate_noisy: per-coordinate variance matches sigma^2 C^2 / L^2") {
  const double sigma = 1.5, clip = 2.0;
  const std::size_t L = 4, dim = 8, draws = 10000;
  std::vector<std::vector<double>> clipped(L, std::vector<double>(dim, 0.25));
  std::vector<double> base(dim, 0.25);  // clipped mean per coordinate

  std::vector<double> sq(dim, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    auto out = aggregate_noisy(clipped, clip, sigma, d + 1);
    for (std::size_t i = 0; i < dim; ++i) {
      const double dev = out[i] - base[i];
      sq[i] += dev * dev;
    }
  }
  const double want = sigma * sigma * clip * clip / static_cast<double>(L * L);
  for (std::size_t i = 0; i < dim; ++i) {
    const double got = sq[i] / draws;
    CHECK(std::abs(got - want) / want <= 0.05);
  }
}

TEST_CASE("rdp closed forms: q=1 Gaussian and q=0") {
  CHECK(rdp_subsampled_gaussian(1.0, 2.0, 8.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rdp_subsampled_gaussian(1.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rdp_subsampled_gaussian(0.0, 1.0, 2.0) == 0.0);
  CHECK_THROWS_AS(rdp_subsampled_gaussian(0.5, 1.0, 1.0), Error);
  CHECK_THROWS_AS(rdp_subsampled_gaussian(0.5, 0.0, 2.0), Error);
}

TEST_CASE("rdp: derived example q=0.01, sigma=1, alpha=2 matches the quadrature oracle") {
  const double got = rdp_subsampled_gaussian(0.01, 1.0, 2.0);
  const double want = sgm_rdp_oracle(0.01, 1.0, 2.0);
  CHECK(std::abs(got - want) <= 1e-6);
  CHECK(got > 0.0);
}

TEST_CASE("rdp matches the quadrature oracle over the grid, integer and fractional orders") {
  const double qs[] = {0.001, 0.01, 0.1};
  const double sigmas[] = {0.5, 1.0, 2.0, 4.0};
  const double orders[] = {1.25, 1.5, 1.75, 2, 3, 5, 8, 16, 32, 64, 128, 256};
  for (double q : qs) {
    for (double sigma : sigmas) {
      for (double alpha : orders) {
        const double got = rdp_subsampled_gaussian(q, sigma, alpha);
        const double want = sgm_rdp_oracle(q, sigma, alpha);
        INFO("q=", q, " sigma=", sigma, " alpha=", alpha, " got=", got, " want=", want);
        CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, want));
      }
    }
  }
}

TEST_CASE("accountant: additivity in steps, interleaving") {
  auto st = make_accountant();
  const double q = 0.02, sigma = 1.2;
  for (int i = 0; i < 10; ++i) account_step(st, q, sigma);
  CHECK(st.steps == 10);
  for (std::size_t i = 0; i < st.orders.size(); ++i) {
    const double per = rdp_subsampled_gaussian(q, sigma, st.orders[i]);
    CHECK(st.accumulated_rdp[i] == doctest::Approx(10.0 * per).epsilon(1e-12));
  }

  // two accountants summed equal one accountant of all steps
  auto a = make_accountant();
  auto b = make_accountant();
  for (int i = 0; i < 3; ++i) account_step(a, q, sigma);
  for (int i = 0; i < 7; ++i) account_step(b, q, sigma);
  for (std::size_t i = 0; i < a.orders.size(); ++i)
    CHECK(a.accumulated_rdp[i] + b.accumulated_rdp[i] ==
          doctest::Approx(st.accumulated_rdp[i]).epsilon(1e-12));
}

TEST_CASE("report_epsilon: no-steps flag, single-order formula, zero rdp") {
  auto st = make_accountant();
  auto rep = report_epsilon(st, 1e-6);
  CHECK(rep.no_steps);
  CHECK(rep.epsilon == 0.0);

  AccountantState single;
  single.orders = {2.0};
  single.accumulated_rdp = {1.0};
  single.steps = 1;
  auto rep2 = report_epsilon(single, 1e-6);
  CHECK(rep2.epsilon == doctest::Approx(1.0 + std::log(1e6)).epsilon(1e-12));
  CHECK(rep2.order == 2.0);

  // all-zero rdp: min log(1/delta)/(alpha-1) at the largest order
  auto zero = make_accountant();
  zero.steps = 1;
  auto rep3 = report_epsilon(zero, 1e-5);
  CHECK(rep3.order == zero.orders.back());
  CHECK(rep3.epsilon == doctest::Approx(std::log(1e5) / (zero.orders.back() - 1.0)));

  // larger delta gives no larger epsilon
  auto rep4 = report_epsilon(single, 1e-4);
  CHECK(rep4.epsilon <= rep2.epsilon);
}

TEST_CASE("epsilon monotone in steps and antitone in sigma over the grid") {
  const double qs[] = {0.001, 0.01, 0.1};
  const double sigmas[] = {0.5, 1.0, 2.0, 4.0};
  const long steps[] = {1, 100, 10000};
  const double delta = 1e-5;
  for (double q : qs) {
    double prev_sigma_eps = -1.0;
    for (std::size_t si = 0; si < 4; ++si) {
      double prev_steps_eps = -1.0;
      for (long t : steps) {
        auto st = make_accountant();
        for (std::size_t i = 0; i < st.orders.size(); ++i)
          st.accumulated_rdp[i] =
              static_cast<double>(t) * rdp_subsampled_gaussian(q, sigmas[si], st.orders[i]);
        st.steps = t;
        const double eps = report_epsilon(st, delta).epsilon;
        if (prev_steps_eps >= 0.0) CHECK(eps >= prev_steps_eps - 1e-12);
        prev_steps_eps = eps;
      }
      // antitone in sigma at fixed T = 10000
      if (prev_sigma_eps >= 0.0) CHECK(prev_steps_eps <= prev_sigma_eps + 1e-12);
      prev_sigma_eps = prev_steps_eps;
    }
  }
}

TEST_CASE("solve_sigma_for_epsilon meets the ceiling") {
  const double q = 0.01, delta = 1e-5, target = 3.0;
  const long steps = 500;
  const double sigma = solve_sigma_for_epsilon(q, steps, delta, target);
  auto st = make_accountant();
  for (std::size_t i = 0; i < st.orders.size(); ++i)
    st.accumulated_rdp[i] = static_cast<double>(steps) * rdp_subsampled_gaussian(q, sigma, st.orders[i]);
  st.steps = steps;
  CHECK(report_epsilon(st, delta).epsilon <= target + 1e-6);
  // not grossly over-noised: 2% below the found sigma must exceed the target
  auto st2 = make_accountant();
  for (std::size_t i = 0; i < st2.orders.size(); ++i)
    st2.accumulated_rdp[i] =
        static_cast<double>(steps) * rdp_subsampled_gaussian(q, sigma * 0.98, st2.orders[i]);
  st2.steps = steps;
  CHECK(report_epsilon(st2, delta).epsilon > target);
}

TEST_CASE("dp config validation") {
  DpConfig cfg;
  cfg.validate();
  cfg.clip_norm = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = DpConfig{};
  cfg.sampling_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = DpConfig{};
  cfg.delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
