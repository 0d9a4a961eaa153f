#include "bpi/environments.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>

namespace bpi {

namespace {

// Right-action profile of the river chains.
constexpr double kSourceStay = 0.7;
constexpr double kSourceAdvance = 0.3;
constexpr double kInteriorRetreat = 0.1;
constexpr double kInteriorStay = 0.6;
constexpr double kInteriorAdvance = 0.3;
constexpr double kTipRetreat = 0.7;
constexpr double kTipStay = 0.3;

constexpr double kLeftRewardAtSource = 0.05;

void set_reward(TabularMdp& mdp, int s, int a, double mean) {
  for (int next = 0; next < mdp.n_states; ++next) mdp.r(s, a, next) = mean;
}

}  // namespace

TabularMdp make_riverswim(int n_states, double discount) {
  if (n_states < 2) {
    throw std::invalid_argument(fmt::format("RiverSwim needs >= 2 states, got {}", n_states));
  }
  TabularMdp mdp(n_states, 2, discount, fmt::format("riverswim-{}", n_states));
  const int last = n_states - 1;
  for (int s = 0; s < n_states; ++s) {
    mdp.p(s, kLeft, std::max(s - 1, 0)) = 1.0;
    if (s == 0) {
      mdp.p(s, kRight, 0) = kSourceStay;
      mdp.p(s, kRight, 1) = kSourceAdvance;
    } else if (s == last) {
      mdp.p(s, kRight, s - 1) = kTipRetreat;
      mdp.p(s, kRight, s) = kTipStay;
    } else {
      mdp.p(s, kRight, s - 1) = kInteriorRetreat;
      mdp.p(s, kRight, s) = kInteriorStay;
      mdp.p(s, kRight, s + 1) = kInteriorAdvance;
    }
  }
  set_reward(mdp, 0, kLeft, kLeftRewardAtSource);
  set_reward(mdp, last, kRight, 1.0);
  return mdp;
}

int forked_state(int branch_len, bool branch_b, int position) {
  if (position == 0) return 0;
  return branch_b ? branch_len - 1 + position : position;
}

TabularMdp make_forked_riverswim(int branch_len, double discount) {
  if (branch_len < 2) {
    throw std::invalid_argument(
        fmt::format("Forked RiverSwim needs branch_len >= 2, got {}", branch_len));
  }
  const int n_states = 2 * branch_len - 1;
  TabularMdp mdp(n_states, 3, discount, fmt::format("forked-riverswim-{}", n_states));

  mdp.p(0, kLeft, 0) = 1.0;
  mdp.p(0, kRight, 0) = kSourceStay;
  mdp.p(0, kRight, forked_state(branch_len, false, 1)) = kSourceAdvance;
  mdp.p(0, kSwitch, 0) = 1.0;

  const int tip = branch_len - 1;
  for (bool branch_b : {false, true}) {
    for (int pos = 1; pos <= tip; ++pos) {
      const int s = forked_state(branch_len, branch_b, pos);
      const int back = forked_state(branch_len, branch_b, pos - 1);
      mdp.p(s, kLeft, back) = 1.0;
      mdp.p(s, kSwitch, forked_state(branch_len, !branch_b, pos)) = 1.0;
      if (pos == tip) {
        mdp.p(s, kRight, back) = kTipRetreat;
        mdp.p(s, kRight, s) = kTipStay;
      } else {
        mdp.p(s, kRight, back) = kInteriorRetreat;
        mdp.p(s, kRight, s) = kInteriorStay;
        mdp.p(s, kRight, forked_state(branch_len, branch_b, pos + 1)) = kInteriorAdvance;
      }
    }
  }
  set_reward(mdp, 0, kLeft, kLeftRewardAtSource);
  set_reward(mdp, forked_state(branch_len, false, tip), kRight, 1.0);
  set_reward(mdp, forked_state(branch_len, true, tip), kRight, 0.95);
  return mdp;
}

std::vector<double> random_mdp_concentration(int n_states) {
  std::vector<double> alpha(static_cast<std::size_t>(n_states));
  for (int i = 1; i <= n_states; ++i) {
    alpha[i - 1] = i == 1 ? 1.0 : alpha[i - 2] + (i - 1) / 10.0;
  }
  return alpha;
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> draw(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<double> gamma(alpha[i], 1.0);
    draw[i] = gamma(rng);
    total += draw[i];
  }
  if (total <= 0.0) {
    // All-underflow draw; only reachable with tiny concentrations.
    std::fill(draw.begin(), draw.end(), 1.0 / static_cast<double>(draw.size()));
    return draw;
  }
  for (double& x : draw) x /= total;
  return draw;
}

TabularMdp make_random_mdp(int n_states, int n_actions, Rng& rng, double discount) {
  if (n_states < 2 || n_actions < 2) {
    throw std::invalid_argument("RandomMDP needs at least 2 states and 2 actions");
  }
  TabularMdp mdp(n_states, n_actions, discount, fmt::format("random-{}", n_states));
  const auto alpha = random_mdp_concentration(n_states);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const auto probs = sample_dirichlet(alpha, rng);
      const auto rewards = sample_dirichlet(alpha, rng);
      for (int next = 0; next < n_states; ++next) {
        mdp.p(s, a, next) = probs[next];
        mdp.r(s, a, next) = rewards[next];
      }
    }
  }
  std::fill(mdp.initial_dist.begin(), mdp.initial_dist.end(), 1.0 / n_states);
  return mdp;
}

using nlohmann::json;

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  json doc;
  doc["name"] = mdp.name;
  doc["n_states"] = mdp.n_states;
  doc["n_actions"] = mdp.n_actions;
  doc["discount"] = mdp.discount;
  doc["initial_dist"] = mdp.initial_dist;
  json transition = json::array();
  json reward = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    json t_rows = json::array();
    json r_rows = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto begin = mdp.pair(s, a) * mdp.n_states;
      t_rows.push_back(std::vector<double>(mdp.transition.begin() + begin,
                                           mdp.transition.begin() + begin + mdp.n_states));
      r_rows.push_back(std::vector<double>(mdp.reward_mean.begin() + begin,
                                           mdp.reward_mean.begin() + begin + mdp.n_states));
    }
    transition.push_back(std::move(t_rows));
    reward.push_back(std::move(r_rows));
  }
  doc["transition"] = std::move(transition);
  doc["reward_mean"] = std::move(reward);

  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << doc.dump(2) << '\n';
}

namespace {

// Rows closer to 1 than this are rounding noise and are kept bit-exact.
constexpr double kRenormalizeSlack = 1e-14;

std::vector<double> read_cube_row(const json& cube, const char* field, int s, int a, int n) {
  const json& row = cube.at(static_cast<std::size_t>(s)).at(static_cast<std::size_t>(a));
  if (!row.is_array() || row.size() != static_cast<std::size_t>(n)) {
    throw MalformedMdpFile(fmt::format("{}[{}][{}] must hold {} numbers", field, s, a, n));
  }
  return row.get<std::vector<double>>();
}

}  // namespace

TabularMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedMdpFile(fmt::format("cannot open {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw MalformedMdpFile(fmt::format("{}: {}", path.string(), e.what()));
  }

  TabularMdp mdp;
  try {
    mdp.n_states = doc.at("n_states").get<int>();
    mdp.n_actions = doc.at("n_actions").get<int>();
    mdp.discount = doc.at("discount").get<double>();
    mdp.initial_dist = doc.at("initial_dist").get<std::vector<double>>();
    mdp.name = doc.value("name", std::string{});
    if (mdp.n_states < 1 || mdp.n_actions < 1) {
      throw MalformedMdpFile("n_states and n_actions must be positive");
    }
    if (mdp.initial_dist.size() != static_cast<std::size_t>(mdp.n_states)) {
      throw MalformedMdpFile("initial_dist length differs from n_states");
    }
    const json& transition = doc.at("transition");
    const json& reward = doc.at("reward_mean");
    const auto n = static_cast<std::size_t>(mdp.n_states);
    if (transition.size() != n || reward.size() != n) {
      throw MalformedMdpFile("transition/reward_mean must have n_states entries");
    }
    mdp.transition.resize(static_cast<std::size_t>(mdp.n_pairs()) * n);
    mdp.reward_mean.resize(mdp.transition.size());
    for (int s = 0; s < mdp.n_states; ++s) {
      if (transition[s].size() != static_cast<std::size_t>(mdp.n_actions) ||
          reward[s].size() != static_cast<std::size_t>(mdp.n_actions)) {
        throw MalformedMdpFile(fmt::format("state {} must list n_actions rows", s));
      }
      for (int a = 0; a < mdp.n_actions; ++a) {
        const auto probs = read_cube_row(transition, "transition", s, a, mdp.n_states);
        const auto means = read_cube_row(reward, "reward_mean", s, a, mdp.n_states);
        for (int next = 0; next < mdp.n_states; ++next) {
          mdp.p(s, a, next) = probs[next];
          mdp.r(s, a, next) = means[next];
        }
      }
    }
  } catch (const json::exception& e) {
    throw MalformedMdpFile(fmt::format("{}: {}", path.string(), e.what()));
  }

  if (!(mdp.discount >= 0.0 && mdp.discount < 1.0)) {
    throw InvalidDiscount(fmt::format("discount must lie in [0,1), got {}", mdp.discount));
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double sum = 0.0;
      for (int next = 0; next < mdp.n_states; ++next) {
        const double prob = mdp.p(s, a, next);
        if (!(prob >= 0.0)) {
          throw NonStochasticRow(
              fmt::format("transition row (state {}, action {}) has a negative entry", s, a), s,
              a);
        }
        const double mean = mdp.r(s, a, next);
        if (!(mean >= 0.0 && mean <= 1.0)) {
          throw RewardOutOfRange(fmt::format(
              "reward_mean[{}][{}][{}] = {} lies outside [0,1]", s, a, next, mean));
        }
        sum += prob;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw NonStochasticRow(
            fmt::format("transition row (state {}, action {}) sums to {}", s, a, sum), s, a);
      }
      if (std::abs(sum - 1.0) > kRenormalizeSlack) {
        for (int next = 0; next < mdp.n_states; ++next) mdp.p(s, a, next) /= sum;
      }
    }
  }
  double init = 0.0;
  for (double w : mdp.initial_dist) {
    if (!(w >= 0.0)) throw MalformedMdpFile("initial_dist has a negative entry");
    init += w;
  }
  if (std::abs(init - 1.0) > 1e-9) {
    throw MalformedMdpFile(fmt::format("initial_dist sums to {}", init));
  }
  if (std::abs(init - 1.0) > kRenormalizeSlack) {
    for (double& w : mdp.initial_dist) w /= init;
  }
  return mdp;
}

}  // namespace bpi
