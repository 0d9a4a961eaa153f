#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpi {

/// Random stream shared by every stochastic component.
using Rng = std::mt19937_64;

/// Base class for contract violations on MDP data.
class InvalidMdp : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure exhausted its budget. Carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// No suboptimal action exists, so gap-based quantities are undefined.
class DegenerateInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Finite discounted MDP with Bernoulli rewards whose mean may depend on the
 * next state.
 *
 * Storage is dense and row-major: transition and reward_mean are indexed by
 * (s * n_actions + a) * n_states + s'. Pair tables elsewhere in the library
 * use the flat index s * n_actions + a.
 */
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward_mean;
  double discount = 0.95;
  std::vector<double> initial_dist;
  std::string name;

  TabularMdp() = default;
  TabularMdp(int states, int actions, double gamma, std::string label = {});

  int n_pairs() const { return n_states * n_actions; }
  std::size_t pair(int s, int a) const {
    return static_cast<std::size_t>(s) * n_actions + a;
  }

  double& p(int s, int a, int next) { return transition[pair(s, a) * n_states + next]; }
  double p(int s, int a, int next) const {
    return transition[pair(s, a) * n_states + next];
  }
  double& r(int s, int a, int next) { return reward_mean[pair(s, a) * n_states + next]; }
  double r(int s, int a, int next) const {
    return reward_mean[pair(s, a) * n_states + next];
  }

  std::span<const double> row(int s, int a) const {
    return {transition.data() + pair(s, a) * n_states, static_cast<std::size_t>(n_states)};
  }

  /// r(s,a) = sum_s' P(s'|s,a) q(s,a,s').
  double expected_reward(int s, int a) const;
  std::vector<double> expected_rewards() const;

  bool operator==(const TabularMdp&) const = default;
};

/// Throws InvalidMdp when any TabularMdp invariant fails.
void validate(const TabularMdp& mdp);

struct ValueSolution {
  std::vector<double> v_star;
  std::vector<double> q_star;  // flat pair index
  std::vector<int> greedy;
  double residual = 0.0;
};

/**
 * Instance-specific hardness quantities of an MDP at its optimal value.
 *
 * Higher moments are kept in root form, moment_roots[k-1][pair] =
 * M^k_sa[V*]^(2^-k), which stays finite for every k up to k_max. Use
 * moment() for the raw 2^k-th central moment and moment_factor() for the
 * M^(2^(1-k)) term that enters the bounds.
 */
struct InstanceQuantities {
  int n_states = 0;
  int n_actions = 0;
  int k_max = 0;
  std::vector<double> gap;
  double gap_min = 0.0;
  std::vector<double> variance;
  std::vector<std::vector<double>> moment_roots;
  std::vector<double> span;
  std::vector<int> k_sup;

  /// 2^k-th central moment. k == 1 returns the variance exactly.
  double moment(int k, std::size_t pair) const;
  /// M^k^(2^(1-k)), i.e. the squared moment root. k == 1 returns the variance.
  double moment_factor(int k, std::size_t pair) const;
};

inline constexpr double kDefaultValueTol = 1e-9;
inline constexpr long kDefaultMaxIter = 1'000'000;
inline constexpr int kDefaultKMax = 19;

/// Greedy ties go to the lowest action index.
ValueSolution value_iteration(const TabularMdp& mdp, double tol = kDefaultValueTol,
                              long max_iter = kDefaultMaxIter);

/// Howard policy iteration with exact linear-solve evaluation. Same output
/// contract as value_iteration; residual is the Bellman residual of v_star.
ValueSolution policy_iteration(const TabularMdp& mdp, int max_iter = 1000);

/// V^pi for a deterministic policy, iterated until the Bellman residual <= tol.
std::vector<double> policy_evaluation(const TabularMdp& mdp, std::span<const int> policy,
                                      double tol = kDefaultValueTol);

/// V^pi for a stochastic policy given as pi[s * n_actions + a].
std::vector<double> policy_evaluation(const TabularMdp& mdp,
                                      std::span<const double> policy_probs,
                                      double tol = kDefaultValueTol);

InstanceQuantities compute_instance_quantities(const TabularMdp& mdp,
                                               const ValueSolution& sol,
                                               int k_max = kDefaultKMax);

struct Transition {
  int state = 0;
  int action = 0;
  int reward = 0;
  int next = 0;
};

/// Draws s' ~ P(.|s,a) and then r ~ Bernoulli(q(s,a,s')).
Transition sample_transition(const TabularMdp& mdp, int s, int a, Rng& rng);

/// Samples an index from a probability vector (inverse CDF).
int sample_index(std::span<const double> probs, Rng& rng);

/// Lowest index attaining the maximum.
int argmax(std::span<const double> values);

}  // namespace bpi
