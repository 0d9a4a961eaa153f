// Serial vs OpenMP timings of the dynamic-programming kernels on a random MDP.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <omp.h>

#include "bpi/environments.hpp"
#include "bpi/kernels.hpp"

namespace {

template <class F>
double best_seconds(int reps, F&& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  int states = 200;
  int actions = 3;
  int reps = 5;
  int sweeps = 20;
  int kmax = 19;
  app.add_option("--states", states);
  app.add_option("--actions", actions);
  app.add_option("--reps", reps);
  app.add_option("--sweeps", sweeps, "backups per timed repetition");
  app.add_option("--kmax", kmax);
  CLI11_PARSE(app, argc, argv);

  bpi::Rng rng(42);
  const auto mdp = bpi::make_random_mdp(states, actions, rng, 0.95);
  const auto rewards = mdp.expected_rewards();
  std::vector<double> v(static_cast<std::size_t>(states), 0.0);
  std::vector<double> q(static_cast<std::size_t>(mdp.n_pairs()));
  std::vector<double> next(v.size());
  std::vector<double> uniform(q.size(), 1.0 / actions);

  std::printf("random MDP %d x %d, %d threads\n", states, actions, omp_get_max_threads());
  std::printf("%-16s %12s %12s %8s %s\n", "kernel", "serial_s", "parallel_s", "speedup", "match");

  auto report = [&](const char* name, double ts, double tp, bool match) {
    std::printf("%-16s %12.6f %12.6f %8.2f %s\n", name, ts, tp, ts / tp, match ? "yes" : "NO");
  };

  {
    std::vector<double> q_s(q.size()), n_s(v.size()), q_p(q.size()), n_p(v.size());
    const double ts = best_seconds(reps, [&] {
      for (int i = 0; i < sweeps; ++i) bpi::serial::bellman_backup(mdp, rewards, v, q_s, n_s);
    });
    const double tp = best_seconds(reps, [&] {
      for (int i = 0; i < sweeps; ++i) bpi::parallel::bellman_backup(mdp, rewards, v, q_p, n_p);
    });
    report("bellman_backup", ts, tp, q_s == q_p && n_s == n_p);
  }
  {
    std::vector<double> n_s(v.size()), n_p(v.size());
    const double ts = best_seconds(reps, [&] {
      for (int i = 0; i < sweeps; ++i) bpi::serial::policy_backup(mdp, rewards, uniform, v, n_s);
    });
    const double tp = best_seconds(reps, [&] {
      for (int i = 0; i < sweeps; ++i) bpi::parallel::policy_backup(mdp, rewards, uniform, v, n_p);
    });
    report("policy_backup", ts, tp, n_s == n_p);
  }
  {
    for (int s = 0; s < states; ++s) v[s] = static_cast<double>(s % 7) / 7.0;
    bpi::PairStatistics ps, pp;
    const double ts = best_seconds(reps, [&] { ps = bpi::serial::pair_statistics(mdp, v, kmax); });
    const double tp = best_seconds(reps, [&] { pp = bpi::parallel::pair_statistics(mdp, v, kmax); });
    report("pair_statistics", ts, tp, ps.moment_roots == pp.moment_roots && ps.span == pp.span);
    if (!(ps.moment_roots == pp.moment_roots)) return 1;
  }
  return 0;
}
