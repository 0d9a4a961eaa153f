#include <doctest.h>

#include <cmath>

#include "bpi/environments.hpp"
#include "bpi/solver.hpp"

namespace {

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mirror descent recovers the minimizer of a quadratic") {
  // sum (w - c)^2 with c on the simplex: minimizer c, value 0.
  const std::vector<double> c{0.1, 0.2, 0.3, 0.15, 0.25, 0.0};
  const bpi::Objective obj = [&](std::span<const double> w, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      f += (w[i] - c[i]) * (w[i] - c[i]);
      if (!g.empty()) g[i] = 2.0 * (w[i] - c[i]);
    }
    return f;
  };
  const auto res = bpi::minimize_on_simplex(obj, 3, 2);
  CHECK(res.value < 1e-9);
  CHECK(l2(res.allocation.weights, c) < 1e-4);
  CHECK(bpi::simplex_residual(res.allocation.weights) < 1e-12);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
}

TEST_CASE("simplex solver on the tilde bound approaches the closed form") {
  const auto mdp = bpi::make_riverswim(5, 0.95);
  const auto sol = bpi::policy_iteration(mdp);
  const auto in = bpi::make_bound_inputs(bpi::compute_instance_quantities(mdp, sol), sol.greedy, 0.95);
  const auto res = bpi::minimize_on_simplex(bpi::bound_objective(bpi::Bound::kTildeU, in), 5, 2);
  const double best = bpi::closed_form_value(in);
  CHECK(res.value >= best * (1 - 1e-12));
  CHECK(res.value <= best * 1.005);
  CHECK(res.value == bpi::tilde_u(in, res.allocation.weights));
}

TEST_CASE("infinite start value is rejected") {
  const bpi::Objective obj = [](std::span<const double>, std::span<double>) {
    return bpi::kBarrier;
  };
  CHECK_THROWS_AS(bpi::minimize_on_simplex(obj, 2, 2), bpi::InfeasibleObjective);
}

TEST_CASE("a deterministic cycle has a single feasible allocation") {
  // One action, 0 -> 1 -> 2 -> 0: the only stationary law is uniform.
  bpi::TabularMdp cycle(3, 1, 0.9);
  for (int s = 0; s < 3; ++s) cycle.p(s, 0, (s + 1) % 3) = 1.0;
  const bpi::FlowPolytope poly(cycle);
  for (double x : poly.interior_point()) CHECK(x == doctest::Approx(1.0 / 3.0));
  const auto p = poly.project(std::vector<double>{0.9, 0.05, 0.05});
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("navigation projection is feasible, idempotent and non-expansive") {
  bpi::Rng rng(6);
  std::vector<bpi::TabularMdp> mdps{bpi::make_riverswim(5, 0.95), bpi::make_forked_riverswim(2, 0.95),
                                    bpi::make_random_mdp(5, 3, rng, 0.95)};
  for (const auto& mdp : mdps) {
    const bpi::FlowPolytope poly(mdp);
    const auto n = static_cast<std::size_t>(mdp.n_pairs());
    const auto& interior = poly.interior_point();
    CHECK(poly.flow_residual(interior) < 1e-10);
    CHECK(bpi::simplex_residual(interior) < 1e-10);

    std::vector<double> ones(n, 1.0);
    const auto x = bpi::sample_dirichlet(ones, rng);
    const auto y = bpi::sample_dirichlet(ones, rng);
    const auto px = poly.project(x);
    const auto py = poly.project(y);
    CHECK(bpi::flow_residual(px, mdp) <= 1e-8);
    CHECK(bpi::simplex_residual(px) <= 1e-9);
    CHECK(l2(poly.project(px), px) < 1e-8);
    CHECK(l2(px, py) <= l2(x, y) + 1e-8);
    // The projection is at least as close as any other feasible point.
    CHECK(l2(px, x) <= l2(interior, x) + 1e-8);

    const auto alloc = bpi::project_navigation(bpi::Allocation::uniform(mdp.n_states, mdp.n_actions), mdp);
    CHECK(alloc.navigation_feasible);
    CHECK_NOTHROW(bpi::validate(alloc, &mdp));
  }
}

TEST_CASE("projection reports a starved budget") {
  const auto mdp = bpi::make_riverswim(5, 0.95);
  const bpi::FlowPolytope poly(mdp);
  // All mass on (last, right): the affine projection goes well negative.
  std::vector<double> w(10, 0.0);
  w[9] = 1.0;
  CHECK_THROWS_AS(poly.project(w, 1e-14, 1), bpi::ConvergenceError);
}

TEST_CASE("navigation-constrained minimization improves on the projected uniform point") {
  const auto mdp = bpi::make_riverswim(5, 0.95);
  const auto sol = bpi::policy_iteration(mdp);
  const auto in = bpi::make_bound_inputs(bpi::compute_instance_quantities(mdp, sol), sol.greedy, 0.95);
  const auto obj = bpi::bound_objective(bpi::Bound::kU, in);
  const auto res = bpi::minimize_with_navigation(obj, mdp);
  CHECK(res.allocation.navigation_feasible);
  CHECK(bpi::flow_residual(res.allocation.weights, mdp) <= 1e-8);
  CHECK_NOTHROW(bpi::validate(res.allocation, &mdp));
  const auto start = bpi::project_navigation(bpi::Allocation::uniform(5, 2), mdp);
  CHECK(res.value < bpi::u(in, start));
  // Navigation can only cost compared with the generative-model minimum.
  const auto free = bpi::minimize_on_simplex(obj, 5, 2);
  CHECK(res.value >= free.value * 0.999);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
}
