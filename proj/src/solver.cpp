#include "bpi/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace bpi {

Objective bound_objective(Bound bound, BoundInputs inputs) {
  validate(inputs);
  return [bound, in = std::move(inputs)](std::span<const double> w, std::span<double> g) {
    return evaluate_bound(bound, in, w, g);
  };
}

namespace {

// Subgradients of the bounds span many orders of magnitude, so the step works
// on (g - min g) / range(g): with eta <= 0.1 no weight shrinks by more than a
// factor exp(-0.1) per step.
double gradient_range(std::span<const double> g) {
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  return *hi - *lo;
}

void mirror_step(std::span<double> w, std::span<const double> g, double eta, double scale) {
  const double g_min = *std::min_element(g.begin(), g.end());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] *= std::exp(-eta * (g[i] - g_min) / scale);
    total += w[i];
  }
  for (double& x : w) x /= total;
}

}  // namespace

SolveResult minimize_on_simplex(const Objective& objective, int n_states, int n_actions,
                                const SimplexOptions& options) {
  const auto n = static_cast<std::size_t>(n_states) * n_actions;
  if (n == 0) throw std::invalid_argument("empty allocation space");
  std::vector<double> w = options.start.empty() ? std::vector<double>(n, 1.0 / n) : options.start;
  if (w.size() != n) throw std::invalid_argument("start point has the wrong size");
  std::vector<double> g(n);

  SolveResult out;
  out.allocation.n_states = n_states;
  out.allocation.n_actions = n_actions;
  out.allocation.weights = w;
  out.value = objective(w, g);
  if (is_barrier(out.value)) {
    throw InfeasibleObjective("objective is infinite at the starting allocation");
  }
  out.trace.reserve(static_cast<std::size_t>(options.iters) + 1);
  out.trace.push_back(out.value);

  for (int t = 1; t <= options.iters; ++t) {
    const double range = gradient_range(g);
    if (range == 0.0) break;  // constant objective or stationary point
    mirror_step(w, g, options.step_scale / std::sqrt(static_cast<double>(t)), range);
    const double value = objective(w, g);
    if (value < out.value) {
      out.value = value;
      out.allocation.weights = w;
    }
    out.trace.push_back(out.value);
    if (is_barrier(value)) break;
  }
  return out;
}

struct FlowPolytope::Impl {
  Eigen::MatrixXd a;       // (S + 1) x (S A)
  Eigen::MatrixXd a_pinv;  // (S A) x (S + 1)
  Eigen::VectorXd b;
};

FlowPolytope::~FlowPolytope() = default;
FlowPolytope::FlowPolytope(FlowPolytope&&) noexcept = default;
FlowPolytope& FlowPolytope::operator=(FlowPolytope&&) noexcept = default;

FlowPolytope::FlowPolytope(const TabularMdp& mdp)
    : n_states_(mdp.n_states), n_actions_(mdp.n_actions), impl_(std::make_unique<Impl>()) {
  const int S = n_states_;
  const int A = n_actions_;
  const int n = S * A;
  impl_->a = Eigen::MatrixXd::Zero(S + 1, n);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const auto col = static_cast<Eigen::Index>(mdp.pair(s, a));
      impl_->a(s, col) += 1.0;
      const auto row = mdp.row(s, a);
      for (int next = 0; next < S; ++next) impl_->a(next, col) -= row[next];
      impl_->a(S, col) = 1.0;
    }
  }
  impl_->b = Eigen::VectorXd::Zero(S + 1);
  impl_->b(S) = 1.0;
  impl_->a_pinv = impl_->a.completeOrthogonalDecomposition().pseudoInverse();

  // Stationary distribution of the uniform policy: least squares on
  // [P_unif^T - I; 1^T] d = [0; 1].
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(S + 1, S);
  for (int s = 0; s < S; ++s) {
    chain(s, s) -= 1.0;
    for (int a = 0; a < A; ++a) {
      const auto row = mdp.row(s, a);
      for (int next = 0; next < S; ++next) chain(next, s) += row[next] / A;
    }
    chain(S, s) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 1);
  rhs(S) = 1.0;
  Eigen::VectorXd d = chain.completeOrthogonalDecomposition().solve(rhs);
  interior_.assign(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (int s = 0; s < S; ++s) total += std::max(d(s), 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) interior_[mdp.pair(s, a)] = std::max(d(s), 0.0) / total / A;
  }
}

std::vector<double> FlowPolytope::project_affine(std::span<const double> w) const {
  const Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd y = x - impl_->a_pinv * (impl_->a * x - impl_->b);
  return {y.data(), y.data() + y.size()};
}

double FlowPolytope::flow_residual(std::span<const double> w) const {
  const Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Eigen::Index>(w.size()));
  return (impl_->a.topRows(n_states_) * x).cwiseAbs().maxCoeff();
}

std::vector<double> FlowPolytope::project(std::span<const double> w, double tol,
                                          long max_iter) const {
  const auto n = static_cast<std::size_t>(n_states_) * n_actions_;
  if (w.size() != n) throw std::invalid_argument("allocation size differs from the polytope");
  // The affine set needs no Dykstra correction; only the orthant step does.
  std::vector<double> x(w.begin(), w.end());
  std::vector<double> p(n, 0.0);
  double gap = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iter; ++it) {
    const auto y = project_affine(x);
    gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double shifted = y[i] + p[i];
      const double z = std::max(shifted, 0.0);
      p[i] = shifted - z;
      gap = std::max(gap, std::abs(z - y[i]));
      x[i] = z;
    }
    if (gap <= tol) return x;
  }
  throw ConvergenceError(
      fmt::format("navigation projection stalled after {} rounds: orthant/affine gap {}, "
                  "flow residual {}, simplex residual {}",
                  max_iter, gap, flow_residual(x), simplex_residual(x)),
      gap);
}

Allocation project_navigation(const Allocation& omega, const TabularMdp& mdp, double tol,
                              long max_iter) {
  const FlowPolytope polytope(mdp);
  Allocation out;
  out.n_states = mdp.n_states;
  out.n_actions = mdp.n_actions;
  out.weights = polytope.project(omega.weights, tol, max_iter);
  out.navigation_feasible = true;
  return out;
}

SolveResult minimize_with_navigation(const Objective& objective, const FlowPolytope& polytope,
                                     const NavigationOptions& options) {
  const auto n = static_cast<std::size_t>(polytope.n_states()) * polytope.n_actions();
  const auto& interior = polytope.interior_point();
  auto mix = [&](std::vector<double>& w) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (1.0 - options.interior_mix) * w[i] + options.interior_mix * interior[i];
    }
  };

  std::vector<double> w;
  if (options.start.empty()) {
    w = polytope.project(std::vector<double>(n, 1.0 / n), options.projection_tol);
  } else {
    if (options.start.size() != n) throw std::invalid_argument("start point has the wrong size");
    w = polytope.project(options.start, options.projection_tol);
  }
  std::vector<double> g(n);

  SolveResult out;
  out.allocation.n_states = polytope.n_states();
  out.allocation.n_actions = polytope.n_actions();
  out.allocation.navigation_feasible = true;
  out.allocation.weights = w;
  out.value = objective(w, g);
  if (is_barrier(out.value)) {
    mix(w);
    out.allocation.weights = w;
    out.value = objective(w, g);
    if (is_barrier(out.value)) {
      throw InfeasibleObjective("objective is infinite at the projected starting allocation");
    }
  }
  out.trace.reserve(static_cast<std::size_t>(options.iters) + 1);
  out.trace.push_back(out.value);

  double value = out.value;
  for (int t = 1; t <= options.iters; ++t) {
    if (!is_barrier(value)) {
      const double range = gradient_range(g);
      if (range == 0.0) break;
      mirror_step(w, g, options.step_scale / std::sqrt(static_cast<double>(t)), range);
    }
    w = polytope.project(w, options.projection_tol);
    mix(w);
    value = objective(w, g);
    if (value < out.value) {
      out.value = value;
      out.allocation.weights = w;
    }
    out.trace.push_back(out.value);
  }
  return out;
}

SolveResult minimize_with_navigation(const Objective& objective, const TabularMdp& mdp,
                                     const NavigationOptions& options) {
  return minimize_with_navigation(objective, FlowPolytope(mdp), options);
}

}  // namespace bpi
