#include <doctest.h>

#include <cmath>

#include "bpi/environments.hpp"
#include "bpi/kernels.hpp"

TEST_CASE("serial and parallel kernels are bit-identical") {
  bpi::Rng rng(8);
  // Large enough to take the OpenMP path.
  const auto mdp = bpi::make_random_mdp(120, 3, rng, 0.9);
  const auto rewards = mdp.expected_rewards();
  std::vector<double> v(120);
  for (int s = 0; s < 120; ++s) v[s] = std::sin(0.1 * s);
  std::vector<double> qs(360), qp(360), ns(120), np(120);
  const double rs = bpi::serial::bellman_backup(mdp, rewards, v, qs, ns);
  const double rp = bpi::parallel::bellman_backup(mdp, rewards, v, qp, np);
  CHECK(rs == rp);
  CHECK(qs == qp);
  CHECK(ns == np);

  std::vector<double> uniform(360, 1.0 / 3.0);
  bpi::serial::policy_backup(mdp, rewards, uniform, v, ns);
  bpi::parallel::policy_backup(mdp, rewards, uniform, v, np);
  CHECK(ns == np);

  const auto ps = bpi::serial::pair_statistics(mdp, v, 19);
  const auto pp = bpi::parallel::pair_statistics(mdp, v, 19);
  CHECK(ps.mean == pp.mean);
  CHECK(ps.variance == pp.variance);
  CHECK(ps.span == pp.span);
  CHECK(ps.moment_roots == pp.moment_roots);
}

TEST_CASE("bellman backup by hand") {
  bpi::TabularMdp mdp(2, 2, 0.5);
  mdp.p(0, 0, 0) = 1.0;
  mdp.p(0, 1, 1) = 1.0;
  mdp.p(1, 0, 0) = 0.5;
  mdp.p(1, 0, 1) = 0.5;
  mdp.p(1, 1, 1) = 1.0;
  const std::vector<double> rewards{0.0, 0.5, 1.0, 0.0};
  const std::vector<double> v{2.0, 4.0};
  std::vector<double> q(4), next(2);
  const double res = bpi::serial::bellman_backup(mdp, rewards, v, q, next);
  CHECK(q == std::vector<double>{1.0, 2.5, 2.5, 2.0});
  CHECK(next == std::vector<double>{2.5, 2.5});
  CHECK(res == 1.5);
}

TEST_CASE("central moment roots") {
  // Fair coin on {0, 2}: every central moment root equals 1.
  const std::vector<double> probs{0.5, 0.5};
  const std::vector<double> values{0.0, 2.0};
  for (int k = 1; k <= 19; ++k) {
    CHECK(bpi::central_moment_root(probs, values, 1.0, k) == doctest::Approx(1.0));
  }
  // Skewed law: compare k = 1, 2 against direct powers.
  const std::vector<double> p2{0.1, 0.6, 0.3};
  const std::vector<double> x2{0.0, 1.0, 5.0};
  const double mean = 0.6 + 1.5;
  double m2 = 0.0;
  double m4 = 0.0;
  for (int i = 0; i < 3; ++i) {
    m2 += p2[i] * std::pow(x2[i] - mean, 2);
    m4 += p2[i] * std::pow(x2[i] - mean, 4);
  }
  CHECK(bpi::central_moment_root(p2, x2, mean, 1) == doctest::Approx(std::sqrt(m2)));
  CHECK(bpi::central_moment_root(p2, x2, mean, 2) == doctest::Approx(std::pow(m4, 0.25)));
  // High orders tend to the largest deviation without overflowing.
  const double r19 = bpi::central_moment_root(p2, x2, mean, 19);
  CHECK(std::isfinite(r19));
  CHECK(r19 == doctest::Approx(5.0 - mean).epsilon(1e-4));
  CHECK(bpi::central_moment_root(p2, std::vector<double>{1.0, 1.0, 1.0}, 1.0, 19) == 0.0);
}
