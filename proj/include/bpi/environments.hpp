#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bpi/mdp.hpp"

namespace bpi {

// Action labels shared by the river environments.
inline constexpr int kLeft = 0;
inline constexpr int kRight = 1;
inline constexpr int kSwitch = 2;

/**
 * RiverSwim chain with n_states states and actions {left, right}.
 *
 * Left moves deterministically toward state 0. Right is the current-fighting
 * move:
 *   state 0          stay 0.7, advance 0.3
 *   interior states  retreat 0.1, stay 0.6, advance 0.3
 *   last state       retreat 0.7, stay 0.3
 * Rewards are Bernoulli(0.05) on (0, left) and Bernoulli(1) on (last, right).
 * The episode starts in state 0.
 */
TabularMdp make_riverswim(int n_states, double discount = 0.95);

/**
 * Forked RiverSwim with 2 * branch_len - 1 states and actions
 * {left, right, switch}.
 *
 * State 0 is the shared source. Branch A occupies states 1..branch_len-1 and
 * branch B states branch_len..2*branch_len-2; position i of one branch is
 * mirrored by position i of the other. Within a branch, right follows the
 * RiverSwim profile (the source acts as the branch's state 0 and advances
 * into branch A), left is deterministic toward the source and switch jumps
 * deterministically to the mirrored state. Switch at the source is a
 * self-loop. Rewards: Bernoulli(0.05) on (source, left), Bernoulli(1) on
 * (tip of A, right), Bernoulli(0.95) on (tip of B, right).
 */
TabularMdp make_forked_riverswim(int branch_len, double discount = 0.95);

/// Index of branch position i (1-based along the branch) in Forked RiverSwim.
int forked_state(int branch_len, bool branch_b, int position);

/// Dirichlet concentration used by make_random_mdp: a_1 = 1,
/// a_i = a_{i-1} + (i - 1) / 10.
std::vector<double> random_mdp_concentration(int n_states);

/// Every transition row and every per-pair next-state reward vector is an
/// independent Dirichlet draw. Uniform initial distribution.
TabularMdp make_random_mdp(int n_states, int n_actions, Rng& rng, double discount = 0.95);

/// Draws from Dirichlet(alpha) via normalized Gamma variates.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

// Distinct load failures. All derive from InvalidMdp.
class MalformedMdpFile : public InvalidMdp {
 public:
  using InvalidMdp::InvalidMdp;
};
class NonStochasticRow : public InvalidMdp {
 public:
  NonStochasticRow(const std::string& what, int state, int action)
      : InvalidMdp(what), state_(state), action_(action) {}
  int state() const { return state_; }
  int action() const { return action_; }

 private:
  int state_;
  int action_;
};
class RewardOutOfRange : public InvalidMdp {
 public:
  using InvalidMdp::InvalidMdp;
};
class InvalidDiscount : public InvalidMdp {
 public:
  using InvalidMdp::InvalidMdp;
};

/// JSON document with n_states, n_actions, discount, initial_dist,
/// transition[s][a][s'], reward_mean[s][a][s'] and an optional name.
void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);
TabularMdp load_mdp(const std::filesystem::path& path);

}  // namespace bpi
