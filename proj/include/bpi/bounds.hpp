#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "bpi/mdp.hpp"

namespace bpi {

inline constexpr double kGoldenRatio = std::numbers::phi;

/// Value returned by a bound when a referenced pair has zero weight.
inline constexpr double kBarrier = std::numeric_limits<double>::infinity();
inline bool is_barrier(double value) { return std::isinf(value); }

/// Distribution over state-action pairs, flat index s * n_actions + a.
struct Allocation {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> weights;
  bool navigation_feasible = false;

  static Allocation uniform(int n_states, int n_actions);

  double operator()(int s, int a) const {
    return weights[static_cast<std::size_t>(s) * n_actions + a];
  }
  /// omega(s) = sum_a omega(s, a).
  double state_mass(int s) const;
};

/// max(|sum - 1|, largest negative entry magnitude).
double simplex_residual(std::span<const double> weights);

/// max_s |omega(s) - sum_{s',a'} P(s|s',a') omega(s',a')|.
double flow_residual(std::span<const double> weights, const TabularMdp& mdp);

/// Throws std::invalid_argument unless weights are a distribution (1e-9) and,
/// when navigation_feasible is set, satisfy the flow constraints within 1e-6.
void validate(const Allocation& omega, const TabularMdp* mdp = nullptr);

/// Which moment order enters U: a single k for every pair, or each pair's
/// own maximizing k (k_sup) from the instance quantities.
struct KChoice {
  enum class Mode { kFixed, kPerPairSup };
  Mode mode = Mode::kFixed;
  int k = 1;

  static KChoice fixed(int k) { return {Mode::kFixed, k}; }
  static KChoice per_pair_sup() { return {Mode::kPerPairSup, 0}; }
};

struct BoundInputs {
  InstanceQuantities quantities;
  std::vector<int> greedy;
  double discount = 0.95;
  double regularizer = 0.0;  // lambda, added to every gap and to the minimum gap
  KChoice k_choice = KChoice::fixed(1);
};

BoundInputs make_bound_inputs(InstanceQuantities quantities, std::vector<int> greedy,
                              double discount, double regularizer = 0.0,
                              KChoice k_choice = KChoice::fixed(1));

/// Throws std::invalid_argument on shape mismatches, negative lambda or an
/// out-of-range fixed k.
void validate(const BoundInputs& inputs);

// Each bound evaluates at a weight vector. When `subgradient` is non-empty it
// is overwritten with a subgradient of the pointwise maximum: the gradient of
// the active term, ties resolved to the first index. Zero weight on a
// referenced pair returns kBarrier and leaves the subgradient zeroed.

double u0(const BoundInputs& inputs, std::span<const double> weights,
          std::span<double> subgradient = {});
double u(const BoundInputs& inputs, std::span<const double> weights,
         std::span<double> subgradient = {});
/// U with the variance in place of the 2^k-th moment term.
double u1(const BoundInputs& inputs, std::span<const double> weights,
          std::span<double> subgradient = {});
double tilde_u(const BoundInputs& inputs, std::span<const double> weights,
               std::span<double> subgradient = {});

inline double u0(const BoundInputs& in, const Allocation& w) { return u0(in, w.weights); }
inline double u(const BoundInputs& in, const Allocation& w) { return u(in, w.weights); }
inline double u1(const BoundInputs& in, const Allocation& w) { return u1(in, w.weights); }
inline double tilde_u(const BoundInputs& in, const Allocation& w) { return tilde_u(in, w.weights); }

enum class Bound { kU0, kU, kU1, kTildeU };
std::string_view bound_name(Bound bound);
double evaluate_bound(Bound bound, const BoundInputs& inputs, std::span<const double> weights,
                      std::span<double> subgradient = {});

/// Per-pair numerators of the tilde bound, (2 + 8 phi^2 M) / (gap + lambda)^2,
/// zero on greedy pairs.
std::vector<double> tilde_pair_weights(const BoundInputs& inputs);
/// max_s C(s) (1 + gamma)^2 / ((gap_min + lambda)^2 (1 - gamma)^2).
double tilde_optimal_weight(const BoundInputs& inputs);

/// Minimizer of tilde_u over the simplex: suboptimal pairs proportional to
/// their weight, every greedy pair sqrt(H * sum H(s,a) / |S|).
Allocation closed_form_allocation(const BoundInputs& inputs);
/// (sqrt(sum H(s,a)) + sqrt(|S| H))^2, the value of tilde_u at its minimizer.
double closed_form_value(const BoundInputs& inputs);

}  // namespace bpi
