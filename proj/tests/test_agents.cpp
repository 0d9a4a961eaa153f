#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bpi/agents.hpp"
#include "bpi/environments.hpp"

namespace {

bool is_distribution(const std::vector<double>& d) {
  const double sum = std::accumulate(d.begin(), d.end(), 0.0);
  return std::abs(sum - 1.0) < 1e-12 &&
         std::all_of(d.begin(), d.end(), [](double x) { return x >= 0.0; });
}

// Drives an agent on an MDP for a number of steps.
void drive(bpi::Agent& agent, const bpi::TabularMdp& mdp, long steps, bpi::Rng& rng) {
  int s = 0;
  for (long t = 0; t < steps; ++t) {
    const auto dist = agent.act_distribution(s, rng);
    REQUIRE(is_distribution(dist));
    const auto tr = bpi::sample_transition(mdp, s, bpi::sample_index(dist, rng), rng);
    agent.observe(tr, rng);
    s = tr.next;
  }
}

}  // namespace

TEST_CASE("interpolated quantiles") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(bpi::interpolated_quantile(v, 0.0) == 1.0);
  CHECK(bpi::interpolated_quantile(v, 1.0) == 4.0);
  CHECK(bpi::interpolated_quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(bpi::interpolated_quantile(v, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK(bpi::interpolated_quantile({7.0}, 0.3) == 7.0);

  bpi::Rng rng(1);
  auto ens = bpi::EnsembleTables::create(1, 2, 3, 1, 0.7, 0.9, rng);
  ens.q = {3.0, 0.0, 1.0, 10.0, 2.0, 5.0};
  ens.m = {0.3, 0.0, 0.1, 1.0, 0.2, 0.5};
  const auto s = bpi::quantile_sample(ens, 0.25);
  CHECK(s.q[0] == doctest::Approx(1.5));
  CHECK(s.q[1] == doctest::Approx(2.5));
  CHECK(s.m[0] == doctest::Approx(0.15));
  CHECK(s.m[1] == doctest::Approx(0.25));
}

TEST_CASE("ensemble initialization ranges") {
  bpi::Rng rng(2);
  const auto ens = bpi::EnsembleTables::create(3, 2, 50, 2, 0.7, 0.9, rng);
  CHECK(ens.q.size() == 300);
  for (double x : ens.q) CHECK((x >= 0.0 && x <= 10.0));
  for (double x : ens.m) CHECK((x >= 0.0 && x <= 1e4));
  CHECK(*std::max_element(ens.m.begin(), ens.m.end()) > 100.0);
  CHECK_THROWS_AS(bpi::EnsembleTables::create(3, 2, 0, 1, 0.7, 0.9, rng), std::invalid_argument);
  CHECK_THROWS_AS(bpi::EnsembleTables::create(3, 2, 5, 1, 1.5, 0.9, rng), std::invalid_argument);
}

TEST_CASE("MF-BPI allocation from point estimates") {
  // gamma = 0.5, no moments: gaps 0.5 and 0.4, pair weights 2/gap^2 = 8 and
  // 12.5, H = 4 * 1.5^2 / (0.4^2 * 0.5^2) = 225, greedy weight sqrt(225 * 20.5 / 2).
  const std::vector<double> q{1.0, 0.5, 0.2, 0.6};
  const std::vector<double> m(4, 0.0);
  const double greedy = std::sqrt(2306.25);
  const auto p0 = bpi::mfbpi_policy(q, m, 2, 2, 0, 0.0, 1, 0.5);
  CHECK(p0[0] == doctest::Approx(greedy / (greedy + 8.0)));
  CHECK(p0[1] == doctest::Approx(8.0 / (greedy + 8.0)));
  const auto p1 = bpi::mfbpi_policy(q, m, 2, 2, 1, 0.0, 1, 0.5);
  CHECK(p1[1] == doctest::Approx(greedy / (greedy + 12.5)));

  // A greedy-pair moment raises H: c = 4 gamma^2 phi^2 M = phi^2 / 2.
  const std::vector<double> m2{0.5, 0.0, 0.0, 0.0};
  const double c = bpi::kGoldenRatio * bpi::kGoldenRatio * 0.5;
  const double greedy2 = std::sqrt(225.0 * c * 20.5 / 2.0);
  CHECK(bpi::mfbpi_policy(q, m2, 2, 2, 0, 0.0, 1, 0.5)[0] ==
        doctest::Approx(greedy2 / (greedy2 + 8.0)));

  // A suboptimal-pair moment enters its own weight: (2 + 8 phi^2 M) / gap^2.
  const std::vector<double> m3{0.0, 0.25, 0.0, 0.0};
  const double w01 = (2.0 + 8.0 * bpi::kGoldenRatio * bpi::kGoldenRatio * 0.25) / 0.25;
  const double greedy3 = std::sqrt(225.0 * (w01 + 12.5) / 2.0);
  CHECK(bpi::mfbpi_policy(q, m3, 2, 2, 0, 0.0, 1, 0.5)[1] ==
        doctest::Approx(w01 / (greedy3 + w01)));
}

TEST_CASE("MF-BPI allocation invariances") {
  const std::vector<double> q{1.0, 0.5, 0.1, 0.2, 0.6, 0.55};
  const std::vector<double> m{0.1, 0.2, 0.3, 0.05, 0.0, 0.4};
  // Shifting one state's Q values leaves every gap unchanged.
  auto shifted = q;
  for (int a = 0; a < 3; ++a) shifted[3 + a] += 4.0;
  for (int s = 0; s < 2; ++s) {
    const auto a = bpi::mfbpi_policy(q, m, 2, 3, s, 0.1, 1, 0.9);
    const auto b = bpi::mfbpi_policy(shifted, m, 2, 3, s, 0.1, 1, 0.9);
    CHECK(is_distribution(a));
    for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
  // A large regularizer washes out the gaps; only the moment terms still
  // separate the suboptimal actions.
  const auto sharp = bpi::mfbpi_policy(q, m, 2, 3, 0, 0.01, 1, 0.9);
  const auto flat = bpi::mfbpi_policy(q, m, 2, 3, 0, 100.0, 1, 0.9);
  const double phi2 = bpi::kGoldenRatio * bpi::kGoldenRatio;
  const double moment_ratio = (2.0 + 8.0 * phi2 * m[1]) / (2.0 + 8.0 * phi2 * m[2]);
  CHECK(std::abs(flat[1] / flat[2] - moment_ratio) < std::abs(sharp[1] / sharp[2] - moment_ratio));
  CHECK(flat[1] / flat[2] == doctest::Approx(moment_ratio).epsilon(0.01));

  CHECK(bpi::mfbpi_policy(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0}, 2, 1, 0,
                          0.0, 1, 0.9) == std::vector<double>{1.0});
  const std::vector<double> tied{1.0, 1.0, 2.0, 2.0};
  CHECK_THROWS_AS(bpi::mfbpi_policy(tied, std::vector<double>(4, 0.0), 2, 2, 0, 0.0, 1, 0.9),
                  std::invalid_argument);
}

TEST_CASE("MF-BPI update with one member is Q-learning") {
  const auto mdp = bpi::make_riverswim(4, 0.9);
  bpi::Rng rng(3);
  auto ens = bpi::EnsembleTables::create(4, 2, 1, 1, 1.0, 0.9, rng);
  auto oracle = ens.q;
  std::vector<long> n(8, 0);
  const double h = 1.0 / (1.0 - 0.9);
  std::uniform_int_distribution<int> pick(0, 1);
  int s = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto tr = bpi::sample_transition(mdp, s, pick(rng), rng);
    bpi::mfbpi_update(ens, tr, rng);
    const int i = tr.state * 2 + tr.action;
    const double alpha = (h + 1.0) / (h + static_cast<double>(++n[i]));
    const double next = std::max(oracle[tr.next * 2], oracle[tr.next * 2 + 1]);
    oracle[i] += alpha * (tr.reward + 0.9 * next - oracle[i]);
    REQUIRE(ens.q == oracle);
    s = tr.next;
  }
  CHECK(std::accumulate(ens.pair_visits.begin(), ens.pair_visits.end(), 0L) == 2000);
  CHECK(ens.member_visits == n);
}

TEST_CASE("update probability zero freezes the tables") {
  bpi::Rng rng(4);
  auto ens = bpi::EnsembleTables::create(2, 2, 5, 1, 0.0, 0.9, rng);
  const auto q = ens.q;
  bpi::mfbpi_update(ens, {0, 1, 1, 1}, rng);
  CHECK(ens.q == q);
  CHECK(ens.pair_visits[1] == 1);
  CHECK(ens.state_visits[0] == 1);
}

TEST_CASE("greedy helpers") {
  const std::vector<double> q{0.1, 0.5, 0.3, 0.9, 0.9, 0.2};
  CHECK(bpi::greedy_from_table(q, 2, 3) == std::vector<int>{1, 0});
  CHECK(bpi::delta_min_from_table(q, 2, 3) == doctest::Approx(0.0));
  CHECK(bpi::delta_min_from_table(std::vector<double>{0.1, 0.5, 0.3, 2.0, 1.0, 0.9}, 2, 3) ==
        doctest::Approx(0.2));

  bpi::Rng rng(5);
  auto ens = bpi::EnsembleTables::create(1, 2, 3, 1, 1.0, 0.9, rng);
  ens.q = {1.0, 0.0, 0.0, 1.0, 0.0, 1.0};
  CHECK(bpi::greedy_policy(ens) == std::vector<int>{1});
  ens.q = {1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
  CHECK(bpi::greedy_policy(ens) == std::vector<int>{0});
}

TEST_CASE("posterior bookkeeping") {
  auto ps = bpi::PosteriorState::create(2, 2);
  bpi::posterior_update(ps, {0, 1, 1, 1});
  bpi::posterior_update(ps, {0, 1, 0, 0});
  bpi::posterior_update(ps, {0, 1, 1, 1});
  CHECK(ps.rho[(0 * 2 + 1) * 2 + 1] == 3.0);
  CHECK(ps.rho[(0 * 2 + 1) * 2 + 0] == 2.0);
  CHECK(ps.alpha[1] == 3.0);
  CHECK(ps.beta[1] == 2.0);
  CHECK(ps.reward_sum[1] == 2.0);
  CHECK(ps.pair_visits[1] == 3);
  const auto mean = bpi::posterior_mean_mdp(ps, 0.9);
  bpi::validate(mean);
  CHECK(mean.p(0, 1, 1) == doctest::Approx(0.6));
  CHECK(mean.expected_reward(0, 1) == doctest::Approx(0.6));
  CHECK(mean.p(1, 0, 0) == doctest::Approx(0.5));
  CHECK(mean.expected_reward(1, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(bpi::PosteriorState::create(2, 2, 0.0), std::invalid_argument);

  // Sample average over many draws tends to the mean.
  bpi::Rng rng(6);
  double p = 0.0;
  double r = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const auto sample = bpi::sample_posterior_mdp(ps, 0.9, rng, true);
    p += sample.p(0, 1, 1) / draws;
    r += sample.expected_reward(0, 1) / draws;
  }
  CHECK(p == doctest::Approx(0.6).epsilon(0.03));
  CHECK(r == doctest::Approx(0.6).epsilon(0.03));
  CHECK(bpi::sample_posterior_mdp(ps, 0.9, rng, false).expected_reward(0, 1) == doctest::Approx(0.6));
}

TEST_CASE("schedules") {
  CHECK(bpi::psrl_period(0.99) == 100);
  CHECK(bpi::psrl_period(0.9) == 10);
  CHECK(bpi::psrl_period(0.95) == 20);
  CHECK(bpi::forced_exploration_rate(0, 0.5) == 1.0);
  CHECK(bpi::forced_exploration_rate(4, 0.5) == doctest::Approx(0.5));
  CHECK(bpi::forced_exploration_rate(10, 1.0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(bpi::forced_exploration_rate(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bpi::forced_exploration_rate(4, 1.5), std::invalid_argument);
  CHECK(bpi::resolve_period(1000, 200, 250) == 200);
  CHECK(bpi::resolve_period(100000, 200, 250) == 400);
  CHECK(bpi::resolve_period(50001, 200, 250) == 201);
  CHECK(bpi::parse_exploration("none") == bpi::ExplorationMode::kNone);
  CHECK(bpi::parse_exploration("soft") == bpi::ExplorationMode::kSoft);
  CHECK(bpi::parse_exploration("floor") == bpi::ExplorationMode::kFloor);
  CHECK_THROWS_AS(bpi::parse_exploration("greedy"), std::invalid_argument);
}

TEST_CASE("Q-UCB without a bonus is optimistic greedy Q-learning") {
  const auto mdp = bpi::make_riverswim(4, 0.9);
  bpi::QucbAgent agent(4, 2, 0.9, 0.0);
  const double h = 1.0 / (1.0 - 0.9);
  std::vector<double> oracle(8, h);
  std::vector<long> n(8, 0);
  bpi::Rng rng(7);
  int s = 0;
  for (int t = 0; t < 3000; ++t) {
    const auto dist = agent.act_distribution(s, rng);
    const int greedy = oracle[s * 2 + 1] > oracle[s * 2] ? 1 : 0;
    REQUIRE(dist[greedy] == 1.0);
    const auto tr = bpi::sample_transition(mdp, s, greedy, rng);
    agent.observe(tr, rng);
    const int i = s * 2 + greedy;
    const double alpha = (h + 1.0) / (h + static_cast<double>(++n[i]));
    const double next = std::min(h, std::max(oracle[tr.next * 2], oracle[tr.next * 2 + 1]));
    oracle[i] += alpha * (tr.reward + 0.9 * next - oracle[i]);
    s = tr.next;
  }
  CHECK(std::vector<double>(agent.q().begin(), agent.q().end()) == oracle);
}

TEST_CASE("every agent emits distributions and is reproducible") {
  const auto mdp = bpi::make_riverswim(4, 0.9);
  CHECK(bpi::agent_names().size() == 6);
  for (const auto& name : bpi::agent_names()) {
    CAPTURE(name);
    bpi::AgentSpec spec;
    spec.name = name;
    spec.ensemble_size = name == "mfbpi" ? std::optional<int>(8) : std::nullopt;
    auto run = [&] {
      bpi::Rng rng(9);
      auto agent = bpi::make_agent(spec, 4, 2, 0.9, rng);
      CHECK(agent->name() == name);
      drive(*agent, mdp, 3000, rng);
      CHECK(agent->greedy_policy().size() == 4);
      CHECK(agent->solver_failures() == 0);
      CHECK(agent->min_pair_visits() >= 0);
      return std::make_pair(agent->greedy_policy(), agent->delta_min_estimate());
    };
    CHECK(run() == run());
  }
  bpi::AgentSpec bad;
  bad.name = "dqn";
  bpi::Rng rng(1);
  CHECK_THROWS_AS(bpi::make_agent(bad, 4, 2, 0.9, rng), std::invalid_argument);
}

TEST_CASE("single-member MF-BPI acts on its own table") {
  bpi::Rng rng(10);
  bpi::MfbpiAgent agent(3, 2, 0.9, 1, 1.0, 1, 0.1, bpi::ExplorationMode::kNone, rng, "mfbpi");
  const auto& t = agent.tables();
  for (int s = 0; s < 3; ++s) {
    const auto expected = bpi::mfbpi_policy(t.q, t.m, 3, 2, s, 0.1, 1, 0.9);
    const auto got = agent.act_distribution(s, rng);
    for (int a = 0; a < 2; ++a) CHECK(got[a] == doctest::Approx(expected[a]).epsilon(1e-14));
  }
}

TEST_CASE("O-BPI keeps a valid allocation and forced exploration") {
  const auto mdp = bpi::make_riverswim(4, 0.9);
  bpi::ObpiAgent agent(4, 2, 0.9, 0.1, 0.5, 50, 250, 100);
  bpi::Rng rng(11);
  drive(agent, mdp, 2000, rng);
  CHECK(agent.solver_failures() == 0);
  CHECK_NOTHROW(bpi::validate(agent.allocation()));
  const auto model = agent.model_estimate();
  bpi::validate(model);
  // Every action keeps at least the forced share 1 / (2 sqrt(N(s))).
  for (int s = 0; s < 4; ++s) {
    const auto d = agent.act_distribution(s, rng);
    for (double x : d) CHECK(x > 0.0);
  }
  CHECK(agent.min_pair_visits() > 0);
}
