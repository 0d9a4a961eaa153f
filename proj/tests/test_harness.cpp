#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bpi/environments.hpp"
#include "bpi/harness.hpp"
#include "bpi/plot.hpp"

namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  const fs::path dir = fs::path(BPI_TEST_TMPDIR) / "harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bpi::ExperimentConfig small_config(const std::string& agent, long horizon, long period) {
  bpi::ExperimentConfig cfg;
  cfg.environment = {"riverswim", 4, 0};
  cfg.agent.name = agent;
  cfg.agent.ensemble_size = 5;
  cfg.horizon = horizon;
  cfg.eval_period = period;
  cfg.seeds = {0, 1, 2};
  cfg.discount = 0.9;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = bpi::parse_config(R"({
    "environment": {"family": "forked", "size": 5, "seed": 3},
    "agent": {"name": "obpi", "hyperparameters": {"lambda": 0.2, "alpha_exp": 0.7}},
    "horizon": 1000, "eval_period": 100, "seeds": [4, 5], "discount": 0.95,
    "output_dir": "somewhere", "master_seed": 9})");
  CHECK(cfg.environment.family == "forked");
  CHECK(cfg.environment.size == 5);
  CHECK(cfg.environment.seed == 3);
  CHECK(cfg.agent.name == "obpi");
  CHECK(cfg.agent.lambda == 0.2);
  CHECK(cfg.agent.alpha_exp == 0.7);
  CHECK(cfg.horizon == 1000);
  CHECK(cfg.seeds == std::vector<int>{4, 5});
  CHECK(cfg.discount == 0.95);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.master_seed == 9);

  CHECK_THROWS_AS(bpi::parse_config(R"({"environment":{"family":"riverswim"},"agent":{"name":"psrl"},"horizn":5})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(bpi::parse_config(R"({"environment":{"family":"riverswim"},"agent":{"name":"psrl","hyperparameters":{"beta":1}}})"),
                  std::invalid_argument);
  CHECK_THROWS(bpi::parse_config("not json"));

  auto bad = small_config("psrl", 10, 0);
  CHECK_THROWS_AS(bpi::validate(bad), std::invalid_argument);
  bad = small_config("psrl", 10, 1);
  bad.seeds.clear();
  CHECK_THROWS_AS(bpi::validate(bad), std::invalid_argument);
  bad = small_config("sarsa", 10, 1);
  CHECK_THROWS_AS(bpi::validate(bad), std::invalid_argument);
}

TEST_CASE("environment construction") {
  CHECK(bpi::make_environment({"riverswim", 6, 0}, 0.9) == bpi::make_riverswim(6, 0.9));
  CHECK(bpi::make_environment({"forked", 7, 0}, 0.9) == bpi::make_forked_riverswim(4, 0.9));
  CHECK_THROWS_AS(bpi::make_environment({"forked", 4, 0}, 0.9), std::invalid_argument);
  const auto r1 = bpi::make_environment({"random", 5, 1}, 0.9);
  const auto r2 = bpi::make_environment({"random", 5, 2}, 0.9);
  CHECK(r1.n_actions == 3);
  CHECK(!(r1 == r2));
  CHECK(r1 == bpi::make_environment({"random", 5, 1}, 0.9));
  CHECK_THROWS_AS(bpi::make_environment({"gridworld", 5, 0}, 0.9), std::invalid_argument);
}

TEST_CASE("seed streams are independent of other seeds") {
  auto a = bpi::seed_stream(0, 3);
  auto b = bpi::seed_stream(0, 3);
  auto c = bpi::seed_stream(0, 4);
  auto d = bpi::seed_stream(1, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("policy quality metric") {
  const auto mdp = bpi::make_riverswim(5, 0.95);
  const auto sol = bpi::value_iteration(mdp, 1e-12);
  CHECK(bpi::evaluate_policy_quality(mdp, sol, sol.greedy) == doctest::Approx(1.0).epsilon(1e-6));

  // Always-left against an independent evaluation of both value functions.
  const std::vector<int> left(5, bpi::kLeft);
  const auto v_left = bpi::policy_evaluation(mdp, left, 1e-12);
  CHECK(v_left[0] == doctest::Approx(1.0));
  double gap = 0.0;
  double norm = 0.0;
  for (int s = 0; s < 5; ++s) {
    gap = std::max(gap, std::abs(sol.v_star[s] - v_left[s]));
    norm = std::max(norm, std::abs(sol.v_star[s]));
  }
  const double metric = bpi::evaluate_policy_quality(mdp, sol, left);
  CHECK(metric == doctest::Approx(1.0 - gap / norm).epsilon(1e-7));
  CHECK(metric < 0.5);

  // Left only at the source dominates always-left state by state.
  std::vector<int> mostly = sol.greedy;
  mostly[0] = bpi::kLeft;
  const auto v_mostly = bpi::policy_evaluation(mdp, mostly, 1e-12);
  for (int s = 0; s < 5; ++s) CHECK(v_mostly[s] >= v_left[s] - 1e-9);
  const double partial = bpi::evaluate_policy_quality(mdp, sol, mostly);
  CHECK(partial < 1.0);
  CHECK(partial > metric);

  for (const auto& env : {bpi::EnvironmentSpec{"forked", 5, 0}, bpi::EnvironmentSpec{"random", 6, 2}}) {
    const auto m = bpi::make_environment(env, 0.99);
    const auto s = bpi::value_iteration(m, 1e-12);
    CHECK(bpi::evaluate_policy_quality(m, s, s.greedy) == doctest::Approx(1.0).epsilon(1e-6));
  }

  bpi::TabularMdp zero(2, 2, 0.9);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) zero.p(s, a, s) = 1.0;
  }
  const auto zsol = bpi::value_iteration(zero);
  CHECK_THROWS_AS(bpi::evaluate_policy_quality(zero, zsol, zsol.greedy), std::invalid_argument);
}

TEST_CASE("row counts and the zero horizon") {
  auto cfg = small_config("mfbpi", 0, 200);
  auto records = bpi::run_experiment(cfg);
  REQUIRE(records.size() == 3);
  for (const auto& r : records) {
    CHECK(r.error.empty());
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].t == 0);
    CHECK(r.rows[0].min_visits == 0);
  }

  cfg = small_config("psrl", 1050, 100);
  records = bpi::run_experiment(cfg);
  for (const auto& r : records) {
    CHECK(r.rows.size() == 1050 / 100 + 1);
    for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].t > r.rows[i - 1].t);
    for (const auto& row : r.rows) CHECK(row.metric <= 1.0 + 1e-9);
    CHECK(r.final_policy.size() == 4);
  }
  CHECK(records[0].seed == 0);
  CHECK(records[2].seed == 2);
}

TEST_CASE("runs are deterministic and seeds do not interact") {
  const auto cfg = small_config("mfbpi", 2000, 250);
  const auto dir_a = tmp_dir("det_a");
  const auto dir_b = tmp_dir("det_b");
  bpi::write_run_outputs(bpi::run_experiment(cfg), dir_a);
  bpi::write_run_outputs(bpi::run_experiment(cfg), dir_b);
  for (const char* f : {"runs.csv", "final_policies.csv"}) {
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
  }
  CHECK(!fs::exists(dir_a / "failures.csv"));
  const auto text = slurp(dir_a / "runs.csv");
  CHECK(text.rfind(std::string(bpi::kRunsHeader) + "\n", 0) == 0);

  auto one = cfg;
  one.seeds = {2};
  const auto alone = bpi::run_experiment(one);
  const auto together = bpi::run_experiment(cfg);
  CHECK(alone[0].final_policy == together[2].final_policy);
  CHECK(alone[0].rows.back().metric == together[2].rows.back().metric);
}

TEST_CASE("a failing seed is recorded") {
  auto cfg = small_config("obpi", 10, 5);
  cfg.agent.alpha_exp = 2.0;  // rejected by the agent at its first step
  const auto records = bpi::run_experiment(cfg);
  const auto dir = tmp_dir("failures");
  bpi::write_run_outputs(records, dir);
  CHECK(!records[0].error.empty());
  CHECK(fs::exists(dir / "failures.csv"));
}

TEST_CASE("quantities report") {
  const auto rows = bpi::quantities_report("riverswim", {5, 10}, 0.95, 19);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size == 5);
  CHECK(rows[0].delta_min == doctest::Approx(0.077).epsilon(0.01));
  CHECK(rows[0].var_min == 0.0);
  CHECK(rows[1].delta_min < rows[0].delta_min);
  CHECK(rows[0].moment_root_max <= rows[0].span_max);

  const auto csv = bpi::quantities_csv(rows);
  CHECK(csv.rfind(std::string(bpi::kQuantitiesHeader) + "\n", 0) == 0);

  // Deterministic chain: variance and moment columns vanish.
  bpi::TabularMdp det(3, 2, 0.9);
  for (int s = 0; s < 3; ++s) {
    det.p(s, 0, std::max(s - 1, 0)) = 1.0;
    det.p(s, 1, std::min(s + 1, 2)) = 1.0;
  }
  det.r(2, 1, 2) = 1.0;
  const auto q = bpi::summarize_quantities(det, 19);
  CHECK(q.var_min == 0.0);
  CHECK(q.var_max == 0.0);
  CHECK(q.moment_root_max == 0.0);

  const auto random = bpi::quantities_report("random", {5}, 0.95, 4, 5, 1);
  CHECK(bpi::quantities_csv(random) == bpi::quantities_csv(bpi::quantities_report("random", {5}, 0.95, 4, 5, 1)));
  CHECK(random[0].delta_min > 0.0);
}

TEST_CASE("bounds comparison table") {
  bpi::BoundsCompareOptions opt;
  opt.iters = 20000;
  const auto rows = bpi::bounds_compare("riverswim", {5}, 0.95, opt);
  REQUIRE(rows.size() == 6);
  double u_star = 0.0;
  double u1_star = 0.0;
  for (const auto& r : rows) {
    CHECK(r.size == 5);
    CHECK(r.value > 0.0);
    CHECK(std::isfinite(r.value));
    if (r.eval_bound == "U" && r.alloc == "omega_star") u_star = r.value;
    if (r.eval_bound == "U" && r.alloc == "omega1_star") u1_star = r.value;
  }
  // Same order of magnitude.
  CHECK(u1_star / u_star >= 0.2);
  CHECK(u1_star / u_star <= 5.0);
  CHECK(bpi::bounds_csv(rows).rfind(std::string(bpi::kBoundsHeader) + "\n", 0) == 0);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 2.9389e7, 1e-300, 0.0}) {
    CHECK(std::stod(bpi::format_number(x)) == x);
  }
  CHECK(bpi::format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("plots are deterministic and reject empty input") {
  const auto dir = tmp_dir("plots");
  const auto cfg = small_config("psrl", 1000, 100);
  bpi::write_run_outputs(bpi::run_experiment(cfg), dir / "run");
  const auto first = bpi::render_plots(dir / "run" / "runs.csv", dir / "a");
  const auto second = bpi::render_plots(dir / "run" / "runs.csv", dir / "b");
  REQUIRE(first.size() == 1);
  CHECK(first[0].filename() == "curves.svg");
  CHECK(slurp(first[0]) == slurp(second[0]));
  CHECK(slurp(first[0]).find("<svg") != std::string::npos);

  bpi::write_quantities_csv(bpi::quantities_report("riverswim", {3, 5}, 0.95, 4), dir / "q.csv");
  const auto qplots = bpi::render_plots(dir / "q.csv", dir / "a");
  REQUIRE(qplots.size() == 1);
  CHECK(qplots[0].filename() == "quantities.svg");

  bpi::BoundsCompareOptions opt;
  opt.iters = 2000;
  bpi::write_bounds_csv(bpi::bounds_compare("riverswim", {3, 4}, 0.95, opt), dir / "b.csv");
  CHECK(bpi::render_plots(dir / "b.csv", dir / "a").size() == 2);

  {
    std::ofstream empty(dir / "empty.csv");
    empty << bpi::kRunsHeader << "\n";
  }
  CHECK_THROWS_AS(bpi::render_plots(dir / "empty.csv", dir / "a"), std::invalid_argument);
  {
    std::ofstream odd(dir / "odd.csv");
    odd << "x,y\n1,2\n";
  }
  CHECK_THROWS_AS(bpi::render_plots(dir / "odd.csv", dir / "a"), std::invalid_argument);
  CHECK_THROWS_AS(bpi::render_curves_svg({}), std::invalid_argument);
}
