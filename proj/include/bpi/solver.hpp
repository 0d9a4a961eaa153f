#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "bpi/bounds.hpp"
#include "bpi/mdp.hpp"

namespace bpi {

/// Objective over flat allocation weights. Writes a subgradient into the
/// second argument unless it is empty. Returns kBarrier outside the domain.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

/// Wraps one of the bound surrogates, capturing the inputs by value.
Objective bound_objective(Bound bound, BoundInputs inputs);

/// The objective was infinite at every trial point.
class InfeasibleObjective : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveResult {
  Allocation allocation;
  double value = 0.0;
  std::vector<double> trace;  // best-so-far objective, one entry per iterate
};

struct SimplexOptions {
  int iters = 50000;
  // eta_t = step_scale / sqrt(t) on a subgradient scaled to unit range, so the
  // first step changes any weight by at most a factor exp(0.1).
  double step_scale = 0.1;
  std::vector<double> start;  // empty: uniform
};

/// Exponentiated-gradient (entropic mirror descent) minimization over the
/// probability simplex. Returns the best iterate seen.
SolveResult minimize_on_simplex(const Objective& objective, int n_states, int n_actions,
                                const SimplexOptions& options = {});

/**
 * The navigation polytope {w >= 0, sum w = 1, w(s) = sum P(s|s',a') w(s',a')}
 * of one MDP, with the affine least-squares projector factored once.
 */
class FlowPolytope {
 public:
  explicit FlowPolytope(const TabularMdp& mdp);
  ~FlowPolytope();
  FlowPolytope(FlowPolytope&&) noexcept;
  FlowPolytope& operator=(FlowPolytope&&) noexcept;

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  /// Euclidean projection onto the affine hull (flow rows plus sum = 1).
  std::vector<double> project_affine(std::span<const double> w) const;

  /// Dykstra alternation between the affine hull and the nonnegative orthant.
  /// Throws ConvergenceError when the two iterates are still more than tol
  /// apart after max_iter rounds.
  std::vector<double> project(std::span<const double> w, double tol = 1e-10,
                              long max_iter = 200000) const;

  /// Stationary state-action distribution of the uniformly random policy;
  /// strictly positive when that chain is irreducible.
  const std::vector<double>& interior_point() const { return interior_; }

  double flow_residual(std::span<const double> w) const;

 private:
  struct Impl;
  int n_states_ = 0;
  int n_actions_ = 0;
  std::unique_ptr<Impl> impl_;
  std::vector<double> interior_;
};

Allocation project_navigation(const Allocation& omega, const TabularMdp& mdp,
                              double tol = 1e-10, long max_iter = 200000);

struct NavigationOptions {
  int iters = 2000;
  double step_scale = 0.1;
  // Each iterate is mixed with the interior point at this weight, keeping all
  // weights off the boundary so the multiplicative step can move them.
  double interior_mix = 1e-3;
  double projection_tol = 1e-10;
  std::vector<double> start;  // empty: projected uniform
};

/// Projected mirror descent over the navigation polytope. The output is
/// flagged navigation_feasible.
SolveResult minimize_with_navigation(const Objective& objective, const FlowPolytope& polytope,
                                     const NavigationOptions& options = {});
SolveResult minimize_with_navigation(const Objective& objective, const TabularMdp& mdp,
                                     const NavigationOptions& options = {});

}  // namespace bpi
