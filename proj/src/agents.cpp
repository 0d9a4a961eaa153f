#include "bpi/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <stdexcept>

#include "bpi/environments.hpp"
#include "bpi/solver.hpp"

namespace bpi {

namespace {

constexpr double kPhi2 = kGoldenRatio * kGoldenRatio;

std::vector<double> uniform_actions(int n_actions) {
  return std::vector<double>(static_cast<std::size_t>(n_actions), 1.0 / n_actions);
}

// (1 - eps) * dist + eps * uniform.
void mix_uniform(std::vector<double>& dist, double eps) {
  const double share = eps / static_cast<double>(dist.size());
  for (double& x : dist) x = (1.0 - eps) * x + share;
}

std::vector<double> allocation_row(const Allocation& omega, int state) {
  std::vector<double> row(static_cast<std::size_t>(omega.n_actions));
  double total = 0.0;
  for (int a = 0; a < omega.n_actions; ++a) {
    row[a] = std::max(omega(state, a), 0.0);
    total += row[a];
  }
  if (!(total > 0.0)) return uniform_actions(omega.n_actions);
  for (double& x : row) x /= total;
  return row;
}

double horizon(double discount) { return 1.0 / (1.0 - discount); }

// M^(2^(1-k)); M itself at k == 1.
double moment_factor(double m, int k) {
  m = std::max(m, 0.0);
  return k == 1 ? m : std::pow(m, std::ldexp(1.0, 1 - k));
}

}  // namespace

EnsembleTables EnsembleTables::create(int n_states, int n_actions, int ensemble_size, int k,
                                      double update_prob, double discount, Rng& rng) {
  if (ensemble_size < 1) throw std::invalid_argument("ensemble size must be at least 1");
  if (k < 1) throw std::invalid_argument("moment order k must be at least 1");
  if (!(update_prob >= 0.0 && update_prob <= 1.0)) {
    throw std::invalid_argument("update probability must lie in [0,1]");
  }
  EnsembleTables t;
  t.n_states = n_states;
  t.n_actions = n_actions;
  t.ensemble_size = ensemble_size;
  t.k = k;
  t.update_prob = update_prob;
  t.discount = discount;
  const std::size_t total = t.n_pairs() * static_cast<std::size_t>(ensemble_size);
  t.q.resize(total);
  t.m.resize(total);
  std::uniform_real_distribution<double> q_init(0.0, horizon(discount));
  std::uniform_real_distribution<double> m_init(0.0, std::pow(horizon(discount), std::ldexp(1.0, k)));
  for (double& x : t.q) x = q_init(rng);
  for (double& x : t.m) x = m_init(rng);
  t.member_visits.assign(total, 0);
  t.state_visits.assign(static_cast<std::size_t>(n_states), 0);
  t.pair_visits.assign(t.n_pairs(), 0);
  return t;
}

double interpolated_quantile(std::vector<double> values, double xi) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("quantile level must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = xi * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

QuantileSample quantile_sample(const EnsembleTables& ensemble, double xi) {
  const std::size_t pairs = ensemble.n_pairs();
  QuantileSample out;
  out.q.resize(pairs);
  out.m.resize(pairs);
  std::vector<double> column(static_cast<std::size_t>(ensemble.ensemble_size));
  for (std::size_t p = 0; p < pairs; ++p) {
    for (int b = 0; b < ensemble.ensemble_size; ++b) column[b] = ensemble.q[b * pairs + p];
    out.q[p] = interpolated_quantile(column, xi);
    for (int b = 0; b < ensemble.ensemble_size; ++b) column[b] = ensemble.m[b * pairs + p];
    out.m[p] = interpolated_quantile(column, xi);
  }
  return out;
}

std::vector<int> greedy_from_table(std::span<const double> q, int n_states, int n_actions) {
  std::vector<int> greedy(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) {
    greedy[s] = argmax(q.subspan(static_cast<std::size_t>(s) * n_actions,
                                 static_cast<std::size_t>(n_actions)));
  }
  return greedy;
}

double delta_min_from_table(std::span<const double> q, int n_states, int n_actions) {
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_states; ++s) {
    const auto row = q.subspan(static_cast<std::size_t>(s) * n_actions,
                               static_cast<std::size_t>(n_actions));
    const int g = argmax(row);
    for (int a = 0; a < n_actions; ++a) {
      if (a != g) best = std::min(best, row[g] - row[a]);
    }
  }
  return std::isfinite(best) ? best : 0.0;
}

std::vector<double> mfbpi_policy(std::span<const double> q_hat, std::span<const double> m_hat,
                                 int n_states, int n_actions, int state, double lambda, int k,
                                 double discount) {
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  if (q_hat.size() != pairs || m_hat.size() != pairs) {
    throw std::invalid_argument("Q/M estimates have the wrong size");
  }
  if (n_actions == 1) return {1.0};
  const auto greedy = greedy_from_table(q_hat, n_states, n_actions);
  const double gap_min = delta_min_from_table(q_hat, n_states, n_actions);
  const double gmin = gap_min + lambda;
  if (!(gmin > 0.0)) {
    throw std::invalid_argument("minimum gap estimate is zero: set a positive lambda");
  }
  const double gamma = discount;

  double h_sum = 0.0;
  double c_max = 0.0;
  std::vector<double> weights(static_cast<std::size_t>(n_actions), 0.0);
  for (int s = 0; s < n_states; ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * n_actions;
    const double best = q_hat[base + greedy[s]];
    for (int a = 0; a < n_actions; ++a) {
      const double mf = moment_factor(m_hat[base + a], k);
      if (a == greedy[s]) {
        c_max = std::max(c_max, std::max(1.0, 4.0 * gamma * gamma * kPhi2 * mf));
        continue;
      }
      const double g = best - q_hat[base + a] + lambda;
      const double h = (2.0 + 8.0 * kPhi2 * mf) / (g * g);
      h_sum += h;
      if (s == state) weights[a] = h;
    }
  }
  const double h_opt = 4.0 * (1.0 + gamma) * (1.0 + gamma) * c_max /
                       (gmin * gmin * (1.0 - gamma) * (1.0 - gamma));
  weights[greedy[state]] = std::sqrt(h_opt * h_sum / n_states);

  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::runtime_error("allocation weights are degenerate at the current state");
  }
  for (double& w : weights) w /= total;
  return weights;
}

void mfbpi_update(EnsembleTables& t, const Transition& tr, Rng& rng) {
  const std::size_t pairs = t.n_pairs();
  const std::size_t idx = static_cast<std::size_t>(tr.state) * t.n_actions + tr.action;
  const std::size_t next_base = static_cast<std::size_t>(tr.next) * t.n_actions;
  const double gamma = t.discount;
  const double h = horizon(gamma);
  const double power = std::ldexp(1.0, t.k);
  ++t.state_visits[tr.state];
  ++t.pair_visits[idx];

  std::bernoulli_distribution gate(t.update_prob);
  for (int b = 0; b < t.ensemble_size; ++b) {
    if (!gate(rng)) continue;
    double* q = t.q.data() + b * pairs;
    double* m = t.m.data() + b * pairs;
    const long n = ++t.member_visits[b * pairs + idx];
    const double alpha = (h + 1.0) / (h + static_cast<double>(n));
    const double beta = std::pow(alpha, 1.1);

    double next_max = q[next_base];
    for (int a = 1; a < t.n_actions; ++a) next_max = std::max(next_max, q[next_base + a]);
    q[idx] += alpha * (tr.reward + gamma * next_max - q[idx]);

    // delta' uses the updated Q; s' may equal s, so recompute the max.
    next_max = q[next_base];
    for (int a = 1; a < t.n_actions; ++a) next_max = std::max(next_max, q[next_base + a]);
    const double delta = tr.reward + gamma * next_max - q[idx];
    const double target = std::pow(delta / gamma, power);
    m[idx] += beta * (target - m[idx]);
  }
}

std::vector<int> greedy_policy(const EnsembleTables& t) {
  std::vector<int> policy(static_cast<std::size_t>(t.n_states));
  std::vector<int> votes(static_cast<std::size_t>(t.n_actions));
  for (int s = 0; s < t.n_states; ++s) {
    std::fill(votes.begin(), votes.end(), 0);
    for (int b = 0; b < t.ensemble_size; ++b) {
      const auto q = t.q_member(b).subspan(static_cast<std::size_t>(s) * t.n_actions,
                                           static_cast<std::size_t>(t.n_actions));
      ++votes[argmax(q)];
    }
    policy[s] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return policy;
}

PosteriorState PosteriorState::create(int n_states, int n_actions, double rho0, double alpha0,
                                      double beta0) {
  if (!(rho0 > 0.0 && alpha0 > 0.0 && beta0 > 0.0)) {
    throw std::invalid_argument("posterior priors must be strictly positive");
  }
  PosteriorState ps;
  ps.n_states = n_states;
  ps.n_actions = n_actions;
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  ps.rho.assign(pairs * n_states, rho0);
  ps.alpha.assign(pairs, alpha0);
  ps.beta.assign(pairs, beta0);
  ps.reward_sum.assign(pairs, 0.0);
  ps.pair_visits.assign(pairs, 0);
  return ps;
}

void posterior_update(PosteriorState& ps, const Transition& tr) {
  const std::size_t idx = static_cast<std::size_t>(tr.state) * ps.n_actions + tr.action;
  ps.rho[idx * ps.n_states + tr.next] += 1.0;
  ps.alpha[idx] += tr.reward;
  ps.beta[idx] += 1.0 - tr.reward;
  ps.reward_sum[idx] += tr.reward;
  ++ps.pair_visits[idx];
}

namespace {

TabularMdp posterior_mdp(const PosteriorState& ps, double discount, Rng* rng,
                         bool sample_rewards) {
  TabularMdp mdp(ps.n_states, ps.n_actions, discount, "posterior");
  std::vector<double> rho(static_cast<std::size_t>(ps.n_states));
  for (int s = 0; s < ps.n_states; ++s) {
    for (int a = 0; a < ps.n_actions; ++a) {
      const std::size_t idx = mdp.pair(s, a);
      std::copy_n(ps.rho.begin() + idx * ps.n_states, ps.n_states, rho.begin());
      std::vector<double> row;
      if (rng != nullptr) {
        row = sample_dirichlet(rho, *rng);
      } else {
        double total = 0.0;
        for (double x : rho) total += x;
        row.resize(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) row[i] = rho[i] / total;
      }
      double mean = ps.alpha[idx] / (ps.alpha[idx] + ps.beta[idx]);
      if (rng != nullptr && sample_rewards) {
        std::gamma_distribution<double> ga(ps.alpha[idx], 1.0);
        std::gamma_distribution<double> gb(ps.beta[idx], 1.0);
        const double x = ga(*rng);
        const double y = gb(*rng);
        if (x + y > 0.0) mean = x / (x + y);
      }
      for (int next = 0; next < ps.n_states; ++next) {
        mdp.p(s, a, next) = row[next];
        mdp.r(s, a, next) = mean;
      }
    }
  }
  return mdp;
}

}  // namespace

TabularMdp posterior_mean_mdp(const PosteriorState& posterior, double discount) {
  return posterior_mdp(posterior, discount, nullptr, false);
}

TabularMdp sample_posterior_mdp(const PosteriorState& posterior, double discount, Rng& rng,
                                bool sample_rewards) {
  return posterior_mdp(posterior, discount, &rng, sample_rewards);
}

long Agent::min_pair_visits() const {
  const auto visits = pair_visits();
  return visits.empty() ? 0 : *std::min_element(visits.begin(), visits.end());
}

double forced_exploration_rate(long state_visits, double alpha_exp) {
  if (!(alpha_exp > 0.0 && alpha_exp <= 1.0)) {
    throw std::invalid_argument("forced-exploration exponent must lie in (0,1]");
  }
  return 1.0 / std::pow(static_cast<double>(std::max(state_visits, 1L)), alpha_exp);
}

long resolve_period(long t, int min_period, int divisor) {
  return std::max<long>(min_period, (t + divisor - 1) / divisor);
}

long psrl_period(double discount) {
  // 1 / (1 - 0.99) evaluates to 100.00000000000009.
  return static_cast<long>(std::ceil(horizon(discount) - 1e-9));
}

ExplorationMode parse_exploration(std::string_view text) {
  if (text == "none") return ExplorationMode::kNone;
  if (text == "soft") return ExplorationMode::kSoft;
  if (text == "floor") return ExplorationMode::kFloor;
  throw std::invalid_argument(fmt::format("unknown exploration mode '{}'", text));
}

// ---------------------------------------------------------------- MF-BPI

MfbpiAgent::MfbpiAgent(int n_states, int n_actions, double discount, int ensemble_size,
                       double update_prob, int k, double lambda, ExplorationMode exploration,
                       Rng& rng, std::string label)
    : tables_(EnsembleTables::create(n_states, n_actions, ensemble_size, k, update_prob,
                                     discount, rng)),
      lambda_(lambda),
      exploration_(exploration),
      label_(std::move(label)) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
}

std::vector<double> MfbpiAgent::act_distribution(int state, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto sample = quantile_sample(tables_, unit(rng));
  auto dist = mfbpi_policy(sample.q, sample.m, tables_.n_states, tables_.n_actions, state,
                           lambda_, tables_.k, tables_.discount);
  const double visits = static_cast<double>(tables_.state_visits[state]);
  const double inv = visits > 0.0 ? 1.0 / visits : 1.0;
  switch (exploration_) {
    case ExplorationMode::kNone: break;
    case ExplorationMode::kSoft: mix_uniform(dist, std::min(1.0, inv)); break;
    case ExplorationMode::kFloor: mix_uniform(dist, std::max(1e-3, inv)); break;
  }
  return dist;
}

void MfbpiAgent::observe(const Transition& tr, Rng& rng) { mfbpi_update(tables_, tr, rng); }

std::vector<int> MfbpiAgent::greedy_policy() const { return bpi::greedy_policy(tables_); }

double MfbpiAgent::delta_min_estimate() const {
  const auto median = quantile_sample(tables_, 0.5);
  return delta_min_from_table(median.q, tables_.n_states, tables_.n_actions);
}

// ----------------------------------------------------------------- O-BPI

namespace {

// Quantities for the allocation problem built from point estimates: gaps
// from a Q table and k = 1 moments from an M table.
InstanceQuantities estimated_quantities(std::span<const double> q, std::span<const double> m,
                                        int n_states, int n_actions) {
  InstanceQuantities iq;
  iq.n_states = n_states;
  iq.n_actions = n_actions;
  iq.k_max = 1;
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  iq.gap.assign(pairs, 0.0);
  const auto greedy = greedy_from_table(q, n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * n_actions;
    for (int a = 0; a < n_actions; ++a) iq.gap[base + a] = q[base + greedy[s]] - q[base + a];
  }
  iq.gap_min = delta_min_from_table(q, n_states, n_actions);
  iq.variance.resize(pairs);
  iq.moment_roots.assign(1, std::vector<double>(pairs));
  for (std::size_t p = 0; p < pairs; ++p) {
    iq.variance[p] = std::max(m[p], 0.0);
    iq.moment_roots[0][p] = std::sqrt(iq.variance[p]);
  }
  iq.span.assign(pairs, 0.0);
  iq.k_sup.assign(pairs, 1);
  return iq;
}

}  // namespace

ObpiAgent::ObpiAgent(int n_states, int n_actions, double discount, double lambda,
                     double alpha_exp, int min_resolve_period, int resolve_divisor,
                     int resolve_iters)
    : lambda_(lambda),
      alpha_exp_(alpha_exp),
      min_resolve_period_(min_resolve_period),
      resolve_divisor_(resolve_divisor),
      resolve_iters_(resolve_iters),
      allocation_(Allocation::uniform(n_states, n_actions)) {
  if (!(lambda > 0.0)) throw std::invalid_argument("O-BPI needs lambda > 0");
  forced_exploration_rate(1, alpha_exp);  // validates the exponent
  Rng unused;
  tables_ = EnsembleTables::create(n_states, n_actions, 1, 1, 1.0, discount, unused);
  std::fill(tables_.q.begin(), tables_.q.end(), horizon(discount));
  std::fill(tables_.m.begin(), tables_.m.end(), 0.0);
  transition_counts_.assign(tables_.n_pairs() * n_states, 0.0);
}

TabularMdp ObpiAgent::model_estimate() const {
  const int n = tables_.n_states;
  TabularMdp mdp(n, tables_.n_actions, tables_.discount, "mle");
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < tables_.n_actions; ++a) {
      const std::size_t idx = mdp.pair(s, a);
      const double total = static_cast<double>(tables_.pair_visits[idx]) + n;
      for (int next = 0; next < n; ++next) {
        mdp.p(s, a, next) = (transition_counts_[idx * n + next] + 1.0) / total;
      }
    }
  }
  return mdp;
}

void ObpiAgent::resolve() {
  try {
    const auto iq = estimated_quantities(tables_.q, tables_.m, tables_.n_states, tables_.n_actions);
    auto inputs = make_bound_inputs(iq, greedy_from_table(tables_.q, tables_.n_states, tables_.n_actions),
                                    tables_.discount, lambda_);
    const FlowPolytope polytope(model_estimate());
    NavigationOptions options;
    options.iters = resolve_iters_;
    options.start = allocation_.weights;
    allocation_ = minimize_with_navigation(bound_objective(Bound::kU, std::move(inputs)), polytope,
                                           options)
                      .allocation;
  } catch (const std::exception&) {
    ++failures_;
    allocation_ = Allocation::uniform(tables_.n_states, tables_.n_actions);
  }
}

std::vector<double> ObpiAgent::act_distribution(int state, Rng&) {
  if (steps_ >= next_resolve_) {
    resolve();
    next_resolve_ = steps_ + resolve_period(steps_, min_resolve_period_, resolve_divisor_);
  }
  auto dist = allocation_row(allocation_, state);
  mix_uniform(dist, forced_exploration_rate(tables_.state_visits[state], alpha_exp_));
  return dist;
}

void ObpiAgent::observe(const Transition& tr, Rng& rng) {
  mfbpi_update(tables_, tr, rng);
  const std::size_t idx = static_cast<std::size_t>(tr.state) * tables_.n_actions + tr.action;
  transition_counts_[idx * tables_.n_states + tr.next] += 1.0;
  ++steps_;
}

std::vector<int> ObpiAgent::greedy_policy() const {
  return greedy_from_table(tables_.q, tables_.n_states, tables_.n_actions);
}

double ObpiAgent::delta_min_estimate() const {
  return delta_min_from_table(tables_.q, tables_.n_states, tables_.n_actions);
}

// ------------------------------------------------------------ PS-MDP-NaS

PsMdpNasAgent::PsMdpNasAgent(int n_states, int n_actions, double discount, double lambda,
                             int min_resolve_period, int resolve_divisor, int resolve_iters)
    : posterior_(PosteriorState::create(n_states, n_actions)),
      discount_(discount),
      lambda_(lambda),
      min_resolve_period_(min_resolve_period),
      resolve_divisor_(resolve_divisor),
      resolve_iters_(resolve_iters),
      allocation_(Allocation::uniform(n_states, n_actions)) {
  if (!(lambda > 0.0)) throw std::invalid_argument("PS-MDP-NaS needs lambda > 0");
}

void PsMdpNasAgent::resample(Rng& rng) {
  try {
    const auto sampled = sample_posterior_mdp(posterior_, discount_, rng, false);
    const auto sol = policy_iteration(sampled);
    auto iq = compute_instance_quantities(sampled, sol, 1);
    delta_min_ = iq.gap_min;
    auto inputs = make_bound_inputs(std::move(iq), sol.greedy, discount_, lambda_);
    const FlowPolytope polytope(sampled);
    NavigationOptions options;
    options.iters = resolve_iters_;
    options.start = allocation_.weights;
    allocation_ = minimize_with_navigation(bound_objective(Bound::kU, std::move(inputs)), polytope,
                                           options)
                      .allocation;
  } catch (const std::exception&) {
    ++failures_;
    allocation_ = Allocation::uniform(posterior_.n_states, posterior_.n_actions);
  }
}

std::vector<double> PsMdpNasAgent::act_distribution(int state, Rng& rng) {
  if (steps_ >= next_resolve_) {
    resample(rng);
    next_resolve_ = steps_ + resolve_period(steps_, min_resolve_period_, resolve_divisor_);
  }
  return allocation_row(allocation_, state);
}

void PsMdpNasAgent::observe(const Transition& tr, Rng&) {
  posterior_update(posterior_, tr);
  ++steps_;
}

std::vector<int> PsMdpNasAgent::greedy_policy() const {
  return policy_iteration(posterior_mean_mdp(posterior_, discount_)).greedy;
}

// ------------------------------------------------------------------ Q-UCB

QucbAgent::QucbAgent(int n_states, int n_actions, double discount, double c)
    : n_states_(n_states),
      n_actions_(n_actions),
      discount_(discount),
      c_(c),
      q_(static_cast<std::size_t>(n_states) * n_actions, horizon(discount)),
      visits_(q_.size(), 0) {
  if (!(c >= 0.0)) throw std::invalid_argument("bonus scale c must be >= 0");
}

std::vector<double> QucbAgent::act_distribution(int state, Rng&) {
  std::vector<double> dist(static_cast<std::size_t>(n_actions_), 0.0);
  dist[argmax(std::span<const double>(q_).subspan(static_cast<std::size_t>(state) * n_actions_,
                                                  static_cast<std::size_t>(n_actions_)))] = 1.0;
  return dist;
}

void QucbAgent::observe(const Transition& tr, Rng&) {
  ++steps_;
  const std::size_t idx = static_cast<std::size_t>(tr.state) * n_actions_ + tr.action;
  const double h = horizon(discount_);
  const double n = static_cast<double>(++visits_[idx]);
  const double alpha = (h + 1.0) / (h + n);
  const double bonus = c_ * std::sqrt(h * std::log(static_cast<double>(steps_) + 1.0) / n);
  const auto next = std::span<const double>(q_).subspan(
      static_cast<std::size_t>(tr.next) * n_actions_, static_cast<std::size_t>(n_actions_));
  const double v_next = std::min(h, *std::max_element(next.begin(), next.end()));
  q_[idx] += alpha * (tr.reward + bonus + discount_ * v_next - q_[idx]);
}

std::vector<int> QucbAgent::greedy_policy() const {
  return greedy_from_table(q_, n_states_, n_actions_);
}

double QucbAgent::delta_min_estimate() const {
  return delta_min_from_table(q_, n_states_, n_actions_);
}

// ------------------------------------------------------------------- PSRL

PsrlAgent::PsrlAgent(int n_states, int n_actions, double discount)
    : posterior_(PosteriorState::create(n_states, n_actions)),
      discount_(discount),
      period_(psrl_period(discount)) {}

std::vector<double> PsrlAgent::act_distribution(int state, Rng& rng) {
  if (steps_ >= next_sample_) {
    const auto sampled = sample_posterior_mdp(posterior_, discount_, rng, true);
    const auto sol = policy_iteration(sampled);
    sampled_policy_ = sol.greedy;
    delta_min_ = delta_min_from_table(sol.q_star, posterior_.n_states, posterior_.n_actions);
    next_sample_ = steps_ + period_;
  }
  std::vector<double> dist(static_cast<std::size_t>(posterior_.n_actions), 0.0);
  dist[sampled_policy_[state]] = 1.0;
  return dist;
}

void PsrlAgent::observe(const Transition& tr, Rng&) {
  posterior_update(posterior_, tr);
  ++steps_;
}

std::vector<int> PsrlAgent::greedy_policy() const {
  return policy_iteration(posterior_mean_mdp(posterior_, discount_)).greedy;
}

// ---------------------------------------------------------------- factory

const std::vector<std::string>& agent_names() {
  static const std::vector<std::string> names{"mfbpi", "mfbpi-forced", "obpi",
                                              "psmdpnas", "qucb", "psrl"};
  return names;
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, int n_states, int n_actions,
                                  double discount, Rng& rng) {
  if (spec.name == "mfbpi" || spec.name == "mfbpi-forced") {
    const bool forced = spec.name == "mfbpi-forced";
    return std::make_unique<MfbpiAgent>(
        n_states, n_actions, discount, spec.ensemble_size.value_or(forced ? 1 : 50),
        spec.update_prob.value_or(forced ? 1.0 : 0.7), spec.k, spec.lambda,
        spec.exploration.value_or(forced ? ExplorationMode::kFloor : ExplorationMode::kNone), rng,
        spec.name);
  }
  if (spec.name == "obpi") {
    return std::make_unique<ObpiAgent>(n_states, n_actions, discount, spec.lambda, spec.alpha_exp,
                                       spec.min_resolve_period, spec.resolve_divisor,
                                       spec.resolve_iters);
  }
  if (spec.name == "psmdpnas") {
    return std::make_unique<PsMdpNasAgent>(n_states, n_actions, discount, spec.lambda,
                                           spec.min_resolve_period, spec.resolve_divisor,
                                           spec.resolve_iters);
  }
  if (spec.name == "qucb") return std::make_unique<QucbAgent>(n_states, n_actions, discount, spec.ucb_c);
  if (spec.name == "psrl") return std::make_unique<PsrlAgent>(n_states, n_actions, discount);
  throw std::invalid_argument(fmt::format("unknown agent '{}'", spec.name));
}

}  // namespace bpi
