#include "bpi/bounds.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <stdexcept>

namespace bpi {

Allocation Allocation::uniform(int n_states, int n_actions) {
  Allocation out;
  out.n_states = n_states;
  out.n_actions = n_actions;
  const auto n = static_cast<std::size_t>(n_states) * n_actions;
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

double Allocation::state_mass(int s) const {
  double total = 0.0;
  for (int a = 0; a < n_actions; ++a) total += (*this)(s, a);
  return total;
}

double simplex_residual(std::span<const double> weights) {
  double sum = 0.0;
  double negative = 0.0;
  for (double w : weights) {
    sum += w;
    negative = std::max(negative, -w);
  }
  return std::max(std::abs(sum - 1.0), negative);
}

double flow_residual(std::span<const double> weights, const TabularMdp& mdp) {
  const int n = mdp.n_states;
  std::vector<double> inflow(static_cast<std::size_t>(n), 0.0);
  std::vector<double> mass(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = weights[mdp.pair(s, a)];
      mass[s] += w;
      if (w == 0.0) continue;
      const auto row = mdp.row(s, a);
      for (int next = 0; next < n; ++next) inflow[next] += row[next] * w;
    }
  }
  double worst = 0.0;
  for (int s = 0; s < n; ++s) worst = std::max(worst, std::abs(mass[s] - inflow[s]));
  return worst;
}

void validate(const Allocation& omega, const TabularMdp* mdp) {
  if (omega.weights.size() != static_cast<std::size_t>(omega.n_states) * omega.n_actions) {
    throw std::invalid_argument("allocation size differs from n_states * n_actions");
  }
  const double residual = simplex_residual(omega.weights);
  if (residual > 1e-9) {
    throw std::invalid_argument(fmt::format("allocation is not a distribution (residual {})", residual));
  }
  if (omega.navigation_feasible && mdp != nullptr) {
    const double flow = flow_residual(omega.weights, *mdp);
    if (flow > 1e-6) {
      throw std::invalid_argument(fmt::format("allocation violates the flow constraints by {}", flow));
    }
  }
}

BoundInputs make_bound_inputs(InstanceQuantities quantities, std::vector<int> greedy,
                              double discount, double regularizer, KChoice k_choice) {
  BoundInputs in;
  in.quantities = std::move(quantities);
  in.greedy = std::move(greedy);
  in.discount = discount;
  in.regularizer = regularizer;
  in.k_choice = k_choice;
  validate(in);
  return in;
}

void validate(const BoundInputs& in) {
  const auto& q = in.quantities;
  const auto pairs = static_cast<std::size_t>(q.n_states) * q.n_actions;
  if (in.greedy.size() != static_cast<std::size_t>(q.n_states)) {
    throw std::invalid_argument("greedy policy length differs from n_states");
  }
  for (int a : in.greedy) {
    if (a < 0 || a >= q.n_actions) throw std::invalid_argument("greedy action out of range");
  }
  if (q.gap.size() != pairs || q.variance.size() != pairs || q.span.size() != pairs) {
    throw std::invalid_argument("instance quantity tables have the wrong size");
  }
  if (!(in.regularizer >= 0.0)) throw std::invalid_argument("regularizer must be >= 0");
  if (!(in.discount >= 0.0 && in.discount < 1.0)) {
    throw std::invalid_argument("discount must lie in [0,1)");
  }
  if (in.k_choice.mode == KChoice::Mode::kFixed &&
      (in.k_choice.k < 1 || in.k_choice.k > std::max(q.k_max, 1))) {
    throw std::invalid_argument(
        fmt::format("fixed k = {} outside 1..{}", in.k_choice.k, q.k_max));
  }
}

namespace {

constexpr double kPhi2 = kGoldenRatio * kGoldenRatio;

std::size_t greedy_pair(const BoundInputs& in, int s) {
  return static_cast<std::size_t>(s) * in.quantities.n_actions + in.greedy[s];
}

bool is_greedy(const BoundInputs& in, std::size_t pair) {
  const int s = static_cast<int>(pair / in.quantities.n_actions);
  return greedy_pair(in, s) == pair;
}

int k_for(const BoundInputs& in, std::size_t pair) {
  return in.k_choice.mode == KChoice::Mode::kFixed ? in.k_choice.k : in.quantities.k_sup[pair];
}

// M^{2^{1-k}} with the variance at k == 1, optionally forced to the variance.
double moment_term(const BoundInputs& in, std::size_t pair, bool variance_only) {
  if (variance_only) return in.quantities.variance[pair];
  return in.quantities.moment_factor(k_for(in, pair), pair);
}

void zero(std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); }

void check_weights(const BoundInputs& in, std::span<const double> w, std::span<double> g) {
  const auto pairs = static_cast<std::size_t>(in.quantities.n_states) * in.quantities.n_actions;
  if (w.size() != pairs) throw std::invalid_argument("weight vector has the wrong size");
  if (!g.empty() && g.size() != pairs) throw std::invalid_argument("subgradient has the wrong size");
}

// Shared body of U and U1:
//   max_sub [ A(s,a) / (w(s,a) g^2) + max_s' B(s') / (w(s',pi*) g^2) ]
// with A = 2 + 8 phi^2 m, B = C (1+gamma)^2 / (1-gamma)^2.
double u_family(const BoundInputs& in, std::span<const double> w, std::span<double> g,
                bool variance_only) {
  check_weights(in, w, g);
  zero(g);
  const auto& q = in.quantities;
  const double gamma = in.discount;
  const double one_minus = 1.0 - gamma;

  // Every term is evaluated with the same operation order as the matching
  // term of tilde_u. Rounding is monotone, so U <= tilde U holds exactly in
  // floating point and not only up to an ulp.
  const auto n_states = static_cast<std::size_t>(q.n_states);
  std::vector<double> opt_numer(n_states);
  std::vector<std::size_t> opt_pairs(n_states);
  for (int s = 0; s < q.n_states; ++s) {
    const std::size_t p = greedy_pair(in, s);
    if (w[p] <= 0.0) return kBarrier;
    const double c = std::max(4.0, 16.0 * gamma * gamma * kPhi2 * moment_term(in, p, variance_only));
    opt_numer[s] = c * (1.0 + gamma) * (1.0 + gamma);
    opt_pairs[s] = p;
  }

  double best = -1.0;
  std::size_t best_pair = 0;
  std::size_t best_opt = 0;
  double best_numer = 0.0;
  double best_denom = 1.0;
  double best_opt_numer = 0.0;
  const auto pairs = static_cast<std::size_t>(q.n_states) * q.n_actions;
  for (std::size_t p = 0; p < pairs; ++p) {
    if (is_greedy(in, p)) continue;
    if (w[p] <= 0.0) return kBarrier;
    const double gap = q.gap[p] + in.regularizer;
    if (gap <= 0.0) return kBarrier;
    const double numer = (2.0 + 8.0 * kPhi2 * moment_term(in, p, variance_only)) / (gap * gap);
    const double denom = gap * gap * one_minus * one_minus;
    double opt_term = -1.0;
    std::size_t opt_pair = 0;
    double opt_n = 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
      const double term = opt_numer[s] / denom / w[opt_pairs[s]];
      if (term > opt_term) {
        opt_term = term;
        opt_pair = opt_pairs[s];
        opt_n = opt_numer[s];
      }
    }
    const double value = numer / w[p] + opt_term;
    if (value > best) {
      best = value;
      best_pair = p;
      best_opt = opt_pair;
      best_numer = numer;
      best_denom = denom;
      best_opt_numer = opt_n;
    }
  }
  if (best < 0.0) throw DegenerateInstance("no suboptimal pair to bound");
  if (!g.empty()) {
    g[best_pair] = -best_numer / (w[best_pair] * w[best_pair]);
    g[best_opt] += -best_opt_numer / best_denom / (w[best_opt] * w[best_opt]);
  }
  return best;
}

// max_sub H(s,a)/w(s,a) + H*/min_s w(s,pi*(s)).
double separable_max(const BoundInputs& in, std::span<const double> w, std::span<double> g,
                     std::span<const double> pair_weight, double opt_weight) {
  check_weights(in, w, g);
  zero(g);
  const auto& q = in.quantities;
  double min_opt = std::numeric_limits<double>::infinity();
  std::size_t min_pair = 0;
  for (int s = 0; s < q.n_states; ++s) {
    const std::size_t p = greedy_pair(in, s);
    if (w[p] <= 0.0) return kBarrier;
    if (w[p] < min_opt) {
      min_opt = w[p];
      min_pair = p;
    }
  }
  double best = -1.0;
  std::size_t best_pair = 0;
  for (std::size_t p = 0; p < pair_weight.size(); ++p) {
    if (is_greedy(in, p)) continue;
    if (w[p] <= 0.0) return kBarrier;
    const double value = pair_weight[p] / w[p];
    if (value > best) {
      best = value;
      best_pair = p;
    }
  }
  if (best < 0.0) throw DegenerateInstance("no suboptimal pair to bound");
  if (!std::isfinite(best) || !std::isfinite(opt_weight)) return kBarrier;
  if (!g.empty()) {
    g[best_pair] = -pair_weight[best_pair] / (w[best_pair] * w[best_pair]);
    g[min_pair] += -opt_weight / (min_opt * min_opt);
  }
  return best + opt_weight / min_opt;
}

}  // namespace

double u(const BoundInputs& inputs, std::span<const double> weights, std::span<double> subgradient) {
  return u_family(inputs, weights, subgradient, false);
}

double u1(const BoundInputs& inputs, std::span<const double> weights, std::span<double> subgradient) {
  return u_family(inputs, weights, subgradient, true);
}

double u0(const BoundInputs& inputs, std::span<const double> weights, std::span<double> subgradient) {
  const auto& q = inputs.quantities;
  const double gamma = inputs.discount;
  const auto pairs = static_cast<std::size_t>(q.n_states) * q.n_actions;

  std::vector<double> h0(pairs, 0.0);
  for (std::size_t p = 0; p < pairs; ++p) {
    if (is_greedy(inputs, p)) continue;
    const double gap = q.gap[p] + inputs.regularizer;
    if (gap <= 0.0) {
      h0[p] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double g2 = gap * gap;
    h0[p] = 2.0 / g2 + std::max(16.0 * q.variance[p] / g2,
                                6.0 * std::pow(q.span[p], 4.0 / 3.0) / std::pow(gap, 4.0 / 3.0));
  }

  double var_opt = 0.0;
  double span_opt = 0.0;
  for (int s = 0; s < q.n_states; ++s) {
    const std::size_t p = greedy_pair(inputs, s);
    var_opt = std::max(var_opt, q.variance[p]);
    span_opt = std::max(span_opt, q.span[p]);
  }
  const double gmin = q.gap_min + inputs.regularizer;
  double h_star = kBarrier;
  if (gmin > 0.0) {
    const double g2 = gmin * gmin;
    const double one_minus = 1.0 - gamma;
    h_star = 2.0 / (g2 * one_minus * one_minus) +
             std::min(27.0 / (g2 * one_minus * one_minus * one_minus),
                      std::max(16.0 * var_opt / (g2 * one_minus * one_minus),
                               6.0 * std::pow(span_opt, 4.0 / 3.0) /
                                   (std::pow(gmin, 4.0 / 3.0) * std::pow(one_minus, 4.0 / 3.0))));
  }
  return separable_max(inputs, weights, subgradient, h0, h_star);
}

std::vector<double> tilde_pair_weights(const BoundInputs& in) {
  const auto& q = in.quantities;
  const auto pairs = static_cast<std::size_t>(q.n_states) * q.n_actions;
  std::vector<double> out(pairs, 0.0);
  for (std::size_t p = 0; p < pairs; ++p) {
    if (is_greedy(in, p)) continue;
    const double gap = q.gap[p] + in.regularizer;
    out[p] = gap > 0.0 ? (2.0 + 8.0 * kPhi2 * moment_term(in, p, false)) / (gap * gap)
                       : std::numeric_limits<double>::infinity();
  }
  return out;
}

double tilde_optimal_weight(const BoundInputs& in) {
  const auto& q = in.quantities;
  const double gamma = in.discount;
  const double gmin = q.gap_min + in.regularizer;
  if (!(gmin > 0.0)) {
    throw std::invalid_argument("minimum gap is zero: set a positive regularizer");
  }
  double c_max = 0.0;
  for (int s = 0; s < q.n_states; ++s) {
    const std::size_t p = greedy_pair(in, s);
    c_max = std::max(c_max, std::max(4.0, 16.0 * gamma * gamma * kPhi2 * moment_term(in, p, false)));
  }
  return c_max * (1.0 + gamma) * (1.0 + gamma) / (gmin * gmin * (1.0 - gamma) * (1.0 - gamma));
}

double tilde_u(const BoundInputs& inputs, std::span<const double> weights,
               std::span<double> subgradient) {
  const auto h = tilde_pair_weights(inputs);
  return separable_max(inputs, weights, subgradient, h, tilde_optimal_weight(inputs));
}

std::string_view bound_name(Bound bound) {
  switch (bound) {
    case Bound::kU0: return "U0";
    case Bound::kU: return "U";
    case Bound::kU1: return "U1";
    case Bound::kTildeU: return "tildeU";
  }
  return "?";
}

double evaluate_bound(Bound bound, const BoundInputs& inputs, std::span<const double> weights,
                      std::span<double> subgradient) {
  switch (bound) {
    case Bound::kU0: return u0(inputs, weights, subgradient);
    case Bound::kU: return u(inputs, weights, subgradient);
    case Bound::kU1: return u1(inputs, weights, subgradient);
    case Bound::kTildeU: return tilde_u(inputs, weights, subgradient);
  }
  throw std::invalid_argument("unknown bound");
}

namespace {

struct ClosedForm {
  std::vector<double> h;
  double h_sum = 0.0;
  double h_opt = 0.0;
};

ClosedForm closed_form_terms(const BoundInputs& in) {
  ClosedForm cf;
  cf.h = tilde_pair_weights(in);
  cf.h_opt = tilde_optimal_weight(in);
  for (std::size_t p = 0; p < cf.h.size(); ++p) {
    if (!is_greedy(in, p)) cf.h_sum += cf.h[p];
  }
  if (!std::isfinite(cf.h_sum)) {
    throw std::invalid_argument("a suboptimal pair has zero gap: set a positive regularizer");
  }
  return cf;
}

}  // namespace

Allocation closed_form_allocation(const BoundInputs& inputs) {
  validate(inputs);
  const auto cf = closed_form_terms(inputs);
  const int n_states = inputs.quantities.n_states;
  const double opt = std::sqrt(cf.h_opt * cf.h_sum / n_states);
  const double total = cf.h_sum + n_states * opt;

  Allocation out;
  out.n_states = n_states;
  out.n_actions = inputs.quantities.n_actions;
  out.weights.resize(cf.h.size());
  for (std::size_t p = 0; p < cf.h.size(); ++p) {
    out.weights[p] = (is_greedy(inputs, p) ? opt : cf.h[p]) / total;
  }
  return out;
}

double closed_form_value(const BoundInputs& inputs) {
  validate(inputs);
  const auto cf = closed_form_terms(inputs);
  const double root = std::sqrt(cf.h_sum) + std::sqrt(inputs.quantities.n_states * cf.h_opt);
  return root * root;
}

}  // namespace bpi
