#include "bpi/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "bpi/kernels.hpp"

namespace bpi {

TabularMdp::TabularMdp(int states, int actions, double gamma, std::string label)
    : n_states(states),
      n_actions(actions),
      transition(static_cast<std::size_t>(states) * actions * states, 0.0),
      reward_mean(static_cast<std::size_t>(states) * actions * states, 0.0),
      discount(gamma),
      initial_dist(static_cast<std::size_t>(states), 0.0),
      name(std::move(label)) {
  if (states > 0) initial_dist[0] = 1.0;
}

double TabularMdp::expected_reward(int s, int a) const {
  double total = 0.0;
  for (int next = 0; next < n_states; ++next) total += p(s, a, next) * r(s, a, next);
  return total;
}

std::vector<double> TabularMdp::expected_rewards() const {
  std::vector<double> out(static_cast<std::size_t>(n_pairs()));
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) out[pair(s, a)] = expected_reward(s, a);
  }
  return out;
}

void validate(const TabularMdp& mdp) {
  if (mdp.n_states < 1 || mdp.n_actions < 1) {
    throw InvalidMdp(fmt::format("MDP needs at least one state and action (got {}x{})",
                                 mdp.n_states, mdp.n_actions));
  }
  const auto cube = static_cast<std::size_t>(mdp.n_pairs()) * mdp.n_states;
  if (mdp.transition.size() != cube || mdp.reward_mean.size() != cube ||
      mdp.initial_dist.size() != static_cast<std::size_t>(mdp.n_states)) {
    throw InvalidMdp("MDP table sizes do not match n_states/n_actions");
  }
  if (!(mdp.discount >= 0.0 && mdp.discount < 1.0)) {
    throw InvalidMdp(fmt::format("discount must lie in [0,1), got {}", mdp.discount));
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double sum = 0.0;
      for (int next = 0; next < mdp.n_states; ++next) {
        const double prob = mdp.p(s, a, next);
        const double q = mdp.r(s, a, next);
        if (!(prob >= 0.0)) {
          throw InvalidMdp(fmt::format("negative transition probability at ({},{},{})", s, a, next));
        }
        if (!(q >= 0.0 && q <= 1.0)) {
          throw InvalidMdp(fmt::format("reward mean outside [0,1] at ({},{},{})", s, a, next));
        }
        sum += prob;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidMdp(fmt::format("transition row ({},{}) sums to {}", s, a, sum));
      }
    }
  }
  double init = 0.0;
  for (double w : mdp.initial_dist) {
    if (!(w >= 0.0)) throw InvalidMdp("initial distribution has a negative entry");
    init += w;
  }
  if (std::abs(init - 1.0) > 1e-9) {
    throw InvalidMdp(fmt::format("initial distribution sums to {}", init));
  }
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

namespace {

std::vector<int> greedy_from_q(const TabularMdp& mdp, std::span<const double> q) {
  std::vector<int> greedy(static_cast<std::size_t>(mdp.n_states));
  for (int s = 0; s < mdp.n_states; ++s) {
    greedy[s] = argmax(q.subspan(mdp.pair(s, 0), static_cast<std::size_t>(mdp.n_actions)));
  }
  return greedy;
}

void check_policy(const TabularMdp& mdp, std::span<const int> policy) {
  if (policy.size() != static_cast<std::size_t>(mdp.n_states)) {
    throw std::invalid_argument("policy length differs from n_states");
  }
  for (int a : policy) {
    if (a < 0 || a >= mdp.n_actions) throw std::out_of_range("policy action out of range");
  }
}

}  // namespace

ValueSolution value_iteration(const TabularMdp& mdp, double tol, long max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration tolerance must be positive");
  const auto rewards = mdp.expected_rewards();
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states), 0.0);
  std::vector<double> v_next(v.size());
  std::vector<double> q(static_cast<std::size_t>(mdp.n_pairs()));
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iter; ++it) {
    residual = parallel::bellman_backup(mdp, rewards, v, q, v_next);
    if (residual <= tol) {
      ValueSolution sol;
      sol.greedy = greedy_from_q(mdp, q);
      sol.v_star = std::move(v);
      sol.q_star = std::move(q);
      sol.residual = residual;
      return sol;
    }
    v.swap(v_next);
  }
  throw ConvergenceError(
      fmt::format("value iteration did not reach tol {} in {} iterations (residual {})", tol,
                  max_iter, residual),
      residual);
}

ValueSolution policy_iteration(const TabularMdp& mdp, int max_iter) {
  const int n = mdp.n_states;
  const auto rewards = mdp.expected_rewards();
  std::vector<int> policy(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    policy[s] = argmax(std::span<const double>(rewards).subspan(
        mdp.pair(s, 0), static_cast<std::size_t>(mdp.n_actions)));
  }
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  std::vector<double> q(static_cast<std::size_t>(mdp.n_pairs()));
  std::vector<double> v_next(v.size());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (int s = 0; s < n; ++s) {
      const auto row = mdp.row(s, policy[s]);
      for (int next = 0; next < n; ++next) system(s, next) -= mdp.discount * row[next];
      rhs(s) = rewards[mdp.pair(s, policy[s])];
    }
    const Eigen::VectorXd solved = system.partialPivLu().solve(rhs);
    for (int s = 0; s < n; ++s) v[s] = solved(s);
    parallel::bellman_backup(mdp, rewards, v, q, v_next);
    bool stable = true;
    for (int s = 0; s < n; ++s) {
      const double current = q[mdp.pair(s, policy[s])];
      const int best = argmax(std::span<const double>(q).subspan(
          mdp.pair(s, 0), static_cast<std::size_t>(mdp.n_actions)));
      // Switch only on a strict improvement to rule out cycling between ties.
      if (q[mdp.pair(s, best)] > current + 1e-12 * (1.0 + std::abs(current))) {
        policy[s] = best;
        stable = false;
      }
    }
    if (stable) break;
  }
  ValueSolution sol;
  sol.residual = parallel::bellman_backup(mdp, rewards, v, q, v_next);
  sol.greedy = greedy_from_q(mdp, q);
  sol.v_star = std::move(v);
  sol.q_star = std::move(q);
  return sol;
}

std::vector<double> policy_evaluation(const TabularMdp& mdp, std::span<const int> policy,
                                      double tol) {
  check_policy(mdp, policy);
  std::vector<double> probs(static_cast<std::size_t>(mdp.n_pairs()), 0.0);
  for (int s = 0; s < mdp.n_states; ++s) probs[mdp.pair(s, policy[s])] = 1.0;
  return policy_evaluation(mdp, std::span<const double>(probs), tol);
}

std::vector<double> policy_evaluation(const TabularMdp& mdp,
                                      std::span<const double> policy_probs, double tol) {
  if (policy_probs.size() != static_cast<std::size_t>(mdp.n_pairs())) {
    throw std::invalid_argument("policy table size differs from n_states * n_actions");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("policy_evaluation tolerance must be positive");
  const auto rewards = mdp.expected_rewards();
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states), 0.0);
  std::vector<double> v_next(v.size());
  while (true) {
    const double residual = parallel::policy_backup(mdp, rewards, policy_probs, v, v_next);
    if (residual <= tol) return v;
    v.swap(v_next);
  }
}

double InstanceQuantities::moment(int k, std::size_t pair) const {
  if (k == 1) return variance[pair];
  return std::pow(moment_roots[static_cast<std::size_t>(k - 1)][pair], std::ldexp(1.0, k));
}

double InstanceQuantities::moment_factor(int k, std::size_t pair) const {
  if (k == 1) return variance[pair];
  const double root = moment_roots[static_cast<std::size_t>(k - 1)][pair];
  return root * root;
}

InstanceQuantities compute_instance_quantities(const TabularMdp& mdp, const ValueSolution& sol,
                                               int k_max) {
  if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
  InstanceQuantities out;
  out.n_states = mdp.n_states;
  out.n_actions = mdp.n_actions;
  out.k_max = k_max;

  const auto n_pairs = static_cast<std::size_t>(mdp.n_pairs());
  out.gap.assign(n_pairs, 0.0);
  out.gap_min = std::numeric_limits<double>::infinity();
  bool any_suboptimal = false;
  for (int s = 0; s < mdp.n_states; ++s) {
    const double best = sol.q_star[mdp.pair(s, sol.greedy[s])];
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double gap = std::max(0.0, best - sol.q_star[mdp.pair(s, a)]);
      out.gap[mdp.pair(s, a)] = gap;
      if (a != sol.greedy[s]) {
        any_suboptimal = true;
        out.gap_min = std::min(out.gap_min, gap);
      }
    }
  }
  if (!any_suboptimal) {
    throw DegenerateInstance("no suboptimal state-action pair: minimum gap is undefined");
  }

  PairStatistics stats = parallel::pair_statistics(mdp, sol.v_star, k_max);
  out.variance = std::move(stats.variance);
  out.span = std::move(stats.span);
  out.moment_roots = std::move(stats.moment_roots);

  out.k_sup.assign(n_pairs, 1);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    double best = out.moment_roots[0][i];
    for (int k = 2; k <= k_max; ++k) {
      if (out.moment_roots[static_cast<std::size_t>(k - 1)][i] > best) {
        best = out.moment_roots[static_cast<std::size_t>(k - 1)][i];
        out.k_sup[i] = k;
      }
    }
  }
  return out;
}

int sample_index(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

Transition sample_transition(const TabularMdp& mdp, int s, int a, Rng& rng) {
  Transition tr;
  tr.state = s;
  tr.action = a;
  tr.next = sample_index(mdp.row(s, a), rng);
  std::bernoulli_distribution coin(mdp.r(s, a, tr.next));
  tr.reward = coin(rng) ? 1 : 0;
  return tr;
}

}  // namespace bpi
