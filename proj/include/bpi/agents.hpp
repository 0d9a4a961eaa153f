#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpi/bounds.hpp"
#include "bpi/mdp.hpp"

namespace bpi {

/// B parallel (Q, M) tables, flat index [b][s * n_actions + a].
struct EnsembleTables {
  int n_states = 0;
  int n_actions = 0;
  int ensemble_size = 1;
  int k = 1;
  double update_prob = 1.0;
  double discount = 0.95;
  std::vector<double> q;
  std::vector<double> m;
  std::vector<long> member_visits;  // N_b(s,a), drives the member's step size
  std::vector<long> state_visits;   // N(s)
  std::vector<long> pair_visits;    // N(s,a)

  /// Q ~ U[0, 1/(1-gamma)], M ~ U[0, 1/(1-gamma)^(2^k)], drawn member by
  /// member in flat order.
  static EnsembleTables create(int n_states, int n_actions, int ensemble_size, int k,
                               double update_prob, double discount, Rng& rng);

  std::size_t n_pairs() const { return static_cast<std::size_t>(n_states) * n_actions; }
  std::span<double> q_member(int b) { return {q.data() + b * n_pairs(), n_pairs()}; }
  std::span<const double> q_member(int b) const { return {q.data() + b * n_pairs(), n_pairs()}; }
  std::span<double> m_member(int b) { return {m.data() + b * n_pairs(), n_pairs()}; }
  std::span<const double> m_member(int b) const { return {m.data() + b * n_pairs(), n_pairs()}; }
};

struct QuantileSample {
  std::vector<double> q;
  std::vector<double> m;
};

/// Per-pair xi-quantile across members with linear interpolation between
/// order statistics at position xi * (B - 1).
QuantileSample quantile_sample(const EnsembleTables& ensemble, double xi);

/// Interpolated xi-quantile of a small sample (copied and sorted).
double interpolated_quantile(std::vector<double> values, double xi);

/// Action distribution at `state` from point estimates of Q and M: suboptimal
/// actions get (2 + 8 phi^2 M^(2^(1-k))) / (gap + lambda)^2 and the greedy
/// action sqrt(H * sum of those weights over all states / |S|), where
/// H = max_s' 4 (1+gamma)^2 max(1, 4 gamma^2 phi^2 M_s'^(2^(1-k))) /
/// ((gap_min + lambda)^2 (1-gamma)^2).
std::vector<double> mfbpi_policy(std::span<const double> q_hat, std::span<const double> m_hat,
                                 int n_states, int n_actions, int state, double lambda, int k,
                                 double discount);

/// One asynchronous two-timescale step for every member selected with
/// probability update_prob. Step sizes alpha = (H+1)/(H+N_b(s,a)) with
/// H = 1/(1-gamma) and beta = alpha^1.1; the M target is (delta'/gamma)^(2^k)
/// with delta' taken from the member's already-updated Q.
void mfbpi_update(EnsembleTables& ensemble, const Transition& tr, Rng& rng);

/// Per-state mode of the members' greedy actions, ties to the lowest action.
std::vector<int> greedy_policy(const EnsembleTables& ensemble);

/// Greedy actions of a single Q table.
std::vector<int> greedy_from_table(std::span<const double> q, int n_states, int n_actions);

/// Smallest gap between the greedy and any other action of a Q table.
double delta_min_from_table(std::span<const double> q, int n_states, int n_actions);

/// Dirichlet transition posterior and Beta reward posterior per pair.
struct PosteriorState {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> rho;          // [s][a][s']
  std::vector<double> alpha;        // [s][a]
  std::vector<double> beta;         // [s][a]
  std::vector<double> reward_sum;   // R(s,a)
  std::vector<long> pair_visits;    // N(s,a)

  static PosteriorState create(int n_states, int n_actions, double rho0 = 1.0,
                               double alpha0 = 1.0, double beta0 = 1.0);
};

/// rho(s,a,s') += 1, alpha += r, beta += 1 - r.
void posterior_update(PosteriorState& posterior, const Transition& tr);

/// Transition rows at the Dirichlet means, reward means alpha / (alpha + beta).
TabularMdp posterior_mean_mdp(const PosteriorState& posterior, double discount);

/// Transition rows drawn from Dirichlet(rho). Reward means are drawn from
/// Beta(alpha, beta) when sample_rewards is set, else alpha / (alpha + beta).
TabularMdp sample_posterior_mdp(const PosteriorState& posterior, double discount, Rng& rng,
                                bool sample_rewards);

/// Common step interface: emit an action distribution at the current state,
/// then ingest the resulting transition.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string_view name() const = 0;
  virtual std::vector<double> act_distribution(int state, Rng& rng) = 0;
  virtual void observe(const Transition& tr, Rng& rng) = 0;
  virtual std::vector<int> greedy_policy() const = 0;
  virtual double delta_min_estimate() const = 0;
  virtual std::span<const long> pair_visits() const = 0;
  /// Allocation solves that failed and fell back to uniform.
  virtual long solver_failures() const { return 0; }

  long min_pair_visits() const;
};

enum class ExplorationMode { kNone, kSoft, kFloor };

struct AgentSpec {
  std::string name = "mfbpi";
  double lambda = 0.1;
  // MF-BPI
  std::optional<int> ensemble_size;   // unset: 50, or 1 for mfbpi-forced
  std::optional<double> update_prob;  // unset: 0.7, or 1 for mfbpi-forced
  int k = 1;
  std::optional<ExplorationMode> exploration;  // unset: per-agent default
  // O-BPI and PS-MDP-NaS
  double alpha_exp = 0.5;
  int min_resolve_period = 200;
  int resolve_divisor = 250;
  int resolve_iters = 200;
  // Q-UCB
  double ucb_c = 0.1;
};

/// mfbpi, mfbpi-forced, obpi, psmdpnas, qucb, psrl.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, int n_states, int n_actions,
                                  double discount, Rng& rng);
const std::vector<std::string>& agent_names();

ExplorationMode parse_exploration(std::string_view text);

/// O-BPI forced-exploration weight 1 / N(s)^alpha, with N(s) = 0 treated as 1.
double forced_exploration_rate(long state_visits, double alpha_exp);

/// Re-solve cadence max(min_period, ceil(t / divisor)).
long resolve_period(long t, int min_period, int divisor);

/// ceil(1 / (1 - gamma)), robust to the rounding of 1 - gamma.
long psrl_period(double discount);

// Concrete agents, exposed for tests.

class MfbpiAgent : public Agent {
 public:
  MfbpiAgent(int n_states, int n_actions, double discount, int ensemble_size, double update_prob,
             int k, double lambda, ExplorationMode exploration, Rng& rng, std::string label);
  std::string_view name() const override { return label_; }
  std::vector<double> act_distribution(int state, Rng& rng) override;
  void observe(const Transition& tr, Rng& rng) override;
  std::vector<int> greedy_policy() const override;
  double delta_min_estimate() const override;
  std::span<const long> pair_visits() const override { return tables_.pair_visits; }
  const EnsembleTables& tables() const { return tables_; }

 private:
  EnsembleTables tables_;
  double lambda_;
  ExplorationMode exploration_;
  std::string label_;
};

class ObpiAgent : public Agent {
 public:
  ObpiAgent(int n_states, int n_actions, double discount, double lambda, double alpha_exp,
            int min_resolve_period, int resolve_divisor, int resolve_iters);
  std::string_view name() const override { return "obpi"; }
  std::vector<double> act_distribution(int state, Rng& rng) override;
  void observe(const Transition& tr, Rng& rng) override;
  std::vector<int> greedy_policy() const override;
  double delta_min_estimate() const override;
  std::span<const long> pair_visits() const override { return tables_.pair_visits; }
  long solver_failures() const override { return failures_; }
  const Allocation& allocation() const { return allocation_; }
  /// Add-one smoothed maximum-likelihood model.
  TabularMdp model_estimate() const;

 private:
  void resolve();

  EnsembleTables tables_;
  std::vector<double> transition_counts_;
  double lambda_;
  double alpha_exp_;
  int min_resolve_period_;
  int resolve_divisor_;
  int resolve_iters_;
  long steps_ = 0;
  long next_resolve_ = 0;
  long failures_ = 0;
  Allocation allocation_;
};

class PsMdpNasAgent : public Agent {
 public:
  PsMdpNasAgent(int n_states, int n_actions, double discount, double lambda,
                int min_resolve_period, int resolve_divisor, int resolve_iters);
  std::string_view name() const override { return "psmdpnas"; }
  std::vector<double> act_distribution(int state, Rng& rng) override;
  void observe(const Transition& tr, Rng& rng) override;
  std::vector<int> greedy_policy() const override;
  double delta_min_estimate() const override { return delta_min_; }
  std::span<const long> pair_visits() const override { return posterior_.pair_visits; }
  long solver_failures() const override { return failures_; }
  const PosteriorState& posterior() const { return posterior_; }

 private:
  void resample(Rng& rng);

  PosteriorState posterior_;
  double discount_;
  double lambda_;
  int min_resolve_period_;
  int resolve_divisor_;
  int resolve_iters_;
  long steps_ = 0;
  long next_resolve_ = 0;
  long failures_ = 0;
  double delta_min_ = 0.0;
  Allocation allocation_;
};

class QucbAgent : public Agent {
 public:
  QucbAgent(int n_states, int n_actions, double discount, double c);
  std::string_view name() const override { return "qucb"; }
  std::vector<double> act_distribution(int state, Rng& rng) override;
  void observe(const Transition& tr, Rng& rng) override;
  std::vector<int> greedy_policy() const override;
  double delta_min_estimate() const override;
  std::span<const long> pair_visits() const override { return visits_; }
  std::span<const double> q() const { return q_; }

 private:
  int n_states_;
  int n_actions_;
  double discount_;
  double c_;
  long steps_ = 0;
  std::vector<double> q_;
  std::vector<long> visits_;
};

class PsrlAgent : public Agent {
 public:
  PsrlAgent(int n_states, int n_actions, double discount);
  std::string_view name() const override { return "psrl"; }
  std::vector<double> act_distribution(int state, Rng& rng) override;
  void observe(const Transition& tr, Rng& rng) override;
  std::vector<int> greedy_policy() const override;
  double delta_min_estimate() const override { return delta_min_; }
  std::span<const long> pair_visits() const override { return posterior_.pair_visits; }
  long period() const { return period_; }

 private:
  PosteriorState posterior_;
  double discount_;
  long period_;
  long steps_ = 0;
  long next_sample_ = 0;
  double delta_min_ = 0.0;
  std::vector<int> sampled_policy_;
};

}  // namespace bpi
