#include "bpi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bpi {
namespace {

// Row kernels shared by the serial and OpenMP loops.

double backup_state(const TabularMdp& mdp, std::span<const double> rewards,
                    std::span<const double> v, std::span<double> q, int s) {
  const int n = mdp.n_states;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < mdp.n_actions; ++a) {
    const auto row = mdp.row(s, a);
    double ev = 0.0;
    for (int next = 0; next < n; ++next) ev += row[next] * v[next];
    const double value = rewards[mdp.pair(s, a)] + mdp.discount * ev;
    q[mdp.pair(s, a)] = value;
    best = std::max(best, value);
  }
  return best;
}

double policy_state(const TabularMdp& mdp, std::span<const double> rewards,
                    std::span<const double> probs, std::span<const double> v, int s) {
  double total = 0.0;
  for (int a = 0; a < mdp.n_actions; ++a) {
    const double w = probs[mdp.pair(s, a)];
    if (w == 0.0) continue;
    const auto row = mdp.row(s, a);
    double ev = 0.0;
    for (int next = 0; next < mdp.n_states; ++next) ev += row[next] * v[next];
    total += w * (rewards[mdp.pair(s, a)] + mdp.discount * ev);
  }
  return total;
}

void pair_entry(const TabularMdp& mdp, std::span<const double> v, int k_max, int s, int a,
                PairStatistics& out) {
  const std::size_t idx = mdp.pair(s, a);
  const auto row = mdp.row(s, a);
  double mean = 0.0;
  for (int next = 0; next < mdp.n_states; ++next) mean += row[next] * v[next];
  double var = 0.0;
  double span = 0.0;
  for (int next = 0; next < mdp.n_states; ++next) {
    const double d = v[next] - mean;
    var += row[next] * d * d;
    span = std::max(span, std::abs(d));
  }
  out.mean[idx] = mean;
  out.variance[idx] = var;
  out.span[idx] = span;
  for (int k = 1; k <= k_max; ++k) {
    out.moment_roots[k - 1][idx] = central_moment_root(row, v, mean, k);
  }
}

PairStatistics allocate_statistics(const TabularMdp& mdp, int k_max) {
  const auto n = static_cast<std::size_t>(mdp.n_pairs());
  PairStatistics stats;
  stats.mean.assign(n, 0.0);
  stats.variance.assign(n, 0.0);
  stats.span.assign(n, 0.0);
  stats.moment_roots.assign(static_cast<std::size_t>(k_max), std::vector<double>(n, 0.0));
  return stats;
}

}  // namespace

double central_moment_root(std::span<const double> probs, std::span<const double> values,
                           double mean, int k) {
  double scale = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) scale = std::max(scale, std::abs(values[i] - mean));
  }
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const double x = (values[i] - mean) / scale;
    double power = x * x;
    for (int j = 1; j < k; ++j) power *= power;
    sum += probs[i] * power;
  }
  return scale * std::pow(sum, std::ldexp(1.0, -k));
}

namespace serial {

double bellman_backup(const TabularMdp& mdp, std::span<const double> rewards,
                      std::span<const double> v, std::span<double> q,
                      std::span<double> v_next) {
  double residual = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    v_next[s] = backup_state(mdp, rewards, v, q, s);
    residual = std::max(residual, std::abs(v_next[s] - v[s]));
  }
  return residual;
}

double policy_backup(const TabularMdp& mdp, std::span<const double> rewards,
                     std::span<const double> policy_probs, std::span<const double> v,
                     std::span<double> v_next) {
  double residual = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    v_next[s] = policy_state(mdp, rewards, policy_probs, v, s);
    residual = std::max(residual, std::abs(v_next[s] - v[s]));
  }
  return residual;
}

PairStatistics pair_statistics(const TabularMdp& mdp, std::span<const double> v, int k_max) {
  PairStatistics stats = allocate_statistics(mdp, k_max);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) pair_entry(mdp, v, k_max, s, a, stats);
  }
  return stats;
}

}  // namespace serial

namespace parallel {

// Below this size the fork/join cost dominates the row work.
constexpr int kParallelMinStates = 64;

double bellman_backup(const TabularMdp& mdp, std::span<const double> rewards,
                      std::span<const double> v, std::span<double> q,
                      std::span<double> v_next) {
  double residual = 0.0;
#pragma omp parallel for reduction(max : residual) schedule(static) if (mdp.n_states >= kParallelMinStates)
  for (int s = 0; s < mdp.n_states; ++s) {
    v_next[s] = backup_state(mdp, rewards, v, q, s);
    residual = std::max(residual, std::abs(v_next[s] - v[s]));
  }
  return residual;
}

double policy_backup(const TabularMdp& mdp, std::span<const double> rewards,
                     std::span<const double> policy_probs, std::span<const double> v,
                     std::span<double> v_next) {
  double residual = 0.0;
#pragma omp parallel for reduction(max : residual) schedule(static) if (mdp.n_states >= kParallelMinStates)
  for (int s = 0; s < mdp.n_states; ++s) {
    v_next[s] = policy_state(mdp, rewards, policy_probs, v, s);
    residual = std::max(residual, std::abs(v_next[s] - v[s]));
  }
  return residual;
}

PairStatistics pair_statistics(const TabularMdp& mdp, std::span<const double> v, int k_max) {
  PairStatistics stats = allocate_statistics(mdp, k_max);
  const int pairs = mdp.n_pairs();
#pragma omp parallel for schedule(static) if (mdp.n_states >= kParallelMinStates)
  for (int idx = 0; idx < pairs; ++idx) {
    pair_entry(mdp, v, k_max, idx / mdp.n_actions, idx % mdp.n_actions, stats);
  }
  return stats;
}

}  // namespace parallel
}  // namespace bpi
