#include "bpi/harness.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <sstream>

#include "bpi/environments.hpp"
#include "bpi/solver.hpp"

namespace bpi {

using nlohmann::json;

TabularMdp make_environment(const EnvironmentSpec& spec, double discount) {
  if (spec.family == "riverswim") return make_riverswim(spec.size, discount);
  if (spec.family == "forked") {
    if (spec.size < 3 || spec.size % 2 == 0) {
      throw std::invalid_argument(
          fmt::format("forked sizes are odd state counts >= 3, got {}", spec.size));
    }
    return make_forked_riverswim((spec.size + 1) / 2, discount);
  }
  if (spec.family == "random") {
    Rng rng = seed_stream(spec.seed, static_cast<std::uint64_t>(spec.size));
    return make_random_mdp(spec.size, 3, rng, discount);
  }
  throw std::invalid_argument(fmt::format("unknown environment family '{}'", spec.family));
}

Rng seed_stream(std::uint64_t master_seed, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// ------------------------------------------------------------------ config

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) ==
        allowed.end()) {
      throw std::invalid_argument(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

AgentSpec parse_agent(const json& doc) {
  reject_unknown(doc, {"name", "hyperparameters"}, "agent");
  AgentSpec spec;
  spec.name = doc.at("name").get<std::string>();
  if (!doc.contains("hyperparameters")) return spec;
  const json& h = doc.at("hyperparameters");
  reject_unknown(h,
                 {"lambda", "ensemble_size", "update_prob", "k", "exploration", "alpha_exp",
                  "min_resolve_period", "resolve_divisor", "resolve_iters", "ucb_c"},
                 "agent.hyperparameters");
  spec.lambda = h.value("lambda", spec.lambda);
  if (h.contains("ensemble_size")) spec.ensemble_size = h.at("ensemble_size").get<int>();
  if (h.contains("update_prob")) spec.update_prob = h.at("update_prob").get<double>();
  spec.k = h.value("k", spec.k);
  if (h.contains("exploration")) {
    spec.exploration = parse_exploration(h.at("exploration").get<std::string>());
  }
  spec.alpha_exp = h.value("alpha_exp", spec.alpha_exp);
  spec.min_resolve_period = h.value("min_resolve_period", spec.min_resolve_period);
  spec.resolve_divisor = h.value("resolve_divisor", spec.resolve_divisor);
  spec.resolve_iters = h.value("resolve_iters", spec.resolve_iters);
  spec.ucb_c = h.value("ucb_c", spec.ucb_c);
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const json doc = json::parse(text);
    reject_unknown(doc,
                   {"environment", "agent", "horizon", "eval_period", "seeds", "discount",
                    "output_dir", "master_seed"},
                   "config");
    const json& env = doc.at("environment");
    reject_unknown(env, {"family", "size", "seed"}, "environment");
    cfg.environment.family = env.at("family").get<std::string>();
    cfg.environment.size = env.at("size").get<int>();
    cfg.environment.seed = env.value("seed", std::uint64_t{0});
    cfg.agent = parse_agent(doc.at("agent"));
    cfg.horizon = doc.at("horizon").get<long>();
    cfg.eval_period = doc.value("eval_period", cfg.eval_period);
    cfg.seeds = doc.at("seeds").get<std::vector<int>>();
    cfg.discount = doc.value("discount", cfg.discount);
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.master_seed = doc.value("master_seed", cfg.master_seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("bad config: {}", e.what()));
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (cfg.eval_period < 1) throw std::invalid_argument("eval_period must be >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  if (!(cfg.discount >= 0.0 && cfg.discount < 1.0)) {
    throw std::invalid_argument("discount must lie in [0,1)");
  }
  const auto& names = agent_names();
  if (std::find(names.begin(), names.end(), cfg.agent.name) == names.end()) {
    throw std::invalid_argument(fmt::format("unknown agent '{}'", cfg.agent.name));
  }
}

// --------------------------------------------------------------------- runs

double evaluate_policy_quality(const TabularMdp& mdp, const ValueSolution& sol,
                               std::span<const int> policy) {
  double norm = 0.0;
  for (double v : sol.v_star) norm = std::max(norm, std::abs(v));
  if (!(norm > 0.0)) throw std::invalid_argument("policy quality is undefined when V* = 0");
  const auto v_pi = policy_evaluation(mdp, policy);
  double worst = 0.0;
  for (std::size_t s = 0; s < v_pi.size(); ++s) {
    worst = std::max(worst, std::abs(sol.v_star[s] - v_pi[s]));
  }
  return 1.0 - worst / norm;
}

RunRecord run_seed(const ExperimentConfig& cfg, const TabularMdp& mdp, const ValueSolution& sol,
                   int seed) {
  RunRecord rec;
  rec.seed = seed;
  try {
    Rng rng = seed_stream(cfg.master_seed, static_cast<std::uint64_t>(seed));
    auto agent = make_agent(cfg.agent, mdp.n_states, mdp.n_actions, mdp.discount, rng);
    auto record = [&](long t) {
      const auto policy = agent->greedy_policy();
      rec.rows.push_back({seed, t, evaluate_policy_quality(mdp, sol, policy),
                          agent->min_pair_visits(), agent->delta_min_estimate()});
    };
    int state = sample_index(mdp.initial_dist, rng);
    record(0);
    for (long t = 1; t <= cfg.horizon; ++t) {
      const auto dist = agent->act_distribution(state, rng);
      const int action = sample_index(dist, rng);
      const Transition tr = sample_transition(mdp, state, action, rng);
      agent->observe(tr, rng);
      state = tr.next;
      if (t % cfg.eval_period == 0) record(t);
    }
    rec.final_policy = agent->greedy_policy();
    rec.solver_failures = agent->solver_failures();
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const TabularMdp mdp = make_environment(cfg.environment, cfg.discount);
  const ValueSolution sol = value_iteration(mdp);
  std::vector<RunRecord> records(cfg.seeds.size());
  const int n = static_cast<int>(cfg.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) records[i] = run_seed(cfg, mdp, sol, cfg.seeds[i]);
  return records;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace

void write_run_outputs(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto runs = open_output(dir / "runs.csv");
  runs << kRunsHeader << '\n';
  for (const auto& rec : records) {
    for (const auto& row : rec.rows) {
      runs << row.seed << ',' << row.t << ',' << format_number(row.metric) << ','
           << row.min_visits << ',' << format_number(row.delta_min_est) << '\n';
    }
  }
  auto policies = open_output(dir / "final_policies.csv");
  policies << "seed,state,action\n";
  for (const auto& rec : records) {
    for (std::size_t s = 0; s < rec.final_policy.size(); ++s) {
      policies << rec.seed << ',' << s << ',' << rec.final_policy[s] << '\n';
    }
  }
  const bool any_failed = std::any_of(records.begin(), records.end(),
                                      [](const RunRecord& r) { return !r.error.empty(); });
  const auto failures_path = dir / "failures.csv";
  if (any_failed) {
    auto failures = open_output(failures_path);
    failures << "seed,error\n";
    for (const auto& rec : records) {
      if (rec.error.empty()) continue;
      std::string msg = rec.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      failures << rec.seed << ',' << msg << '\n';
    }
  } else {
    std::filesystem::remove(failures_path);
  }
}

// --------------------------------------------------------------- quantities

QuantitiesRow summarize_quantities(const TabularMdp& mdp, int k_max) {
  const auto sol = value_iteration(mdp);
  const auto q = compute_instance_quantities(mdp, sol, k_max);
  QuantitiesRow row;
  row.size = mdp.n_states;
  row.delta_min = q.gap_min;
  row.delta_max = *std::max_element(q.gap.begin(), q.gap.end());
  row.span_min = *std::min_element(q.span.begin(), q.span.end());
  row.span_max = *std::max_element(q.span.begin(), q.span.end());
  row.var_min = *std::min_element(q.variance.begin(), q.variance.end());
  row.var_max = *std::max_element(q.variance.begin(), q.variance.end());
  for (const auto& roots : q.moment_roots) {
    row.moment_root_max = std::max(row.moment_root_max, *std::max_element(roots.begin(), roots.end()));
  }
  return row;
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TabularMdp environment_draw(const std::string& family, int size, double discount,
                            std::uint64_t seed, int draw) {
  if (family == "random") {
    Rng rng = seed_stream(seed, static_cast<std::uint64_t>(size) * 1000003u + draw);
    return make_random_mdp(size, 3, rng, discount);
  }
  return make_environment({family, size, seed}, discount);
}

}  // namespace

std::vector<QuantitiesRow> quantities_report(const std::string& family,
                                             const std::vector<int>& sizes, double discount,
                                             int k_max, int draws, std::uint64_t seed) {
  std::vector<QuantitiesRow> out;
  for (int size : sizes) {
    if (family != "random") {
      out.push_back(summarize_quantities(environment_draw(family, size, discount, seed, 0), k_max));
      continue;
    }
    if (draws < 1) throw std::invalid_argument("draws must be >= 1");
    std::vector<QuantitiesRow> rows(static_cast<std::size_t>(draws));
#pragma omp parallel for schedule(dynamic, 1)
    for (int d = 0; d < draws; ++d) {
      rows[d] = summarize_quantities(environment_draw(family, size, discount, seed, d), k_max);
    }
    auto column = [&](double QuantitiesRow::*field) {
      std::vector<double> v;
      for (const auto& r : rows) v.push_back(r.*field);
      return median(std::move(v));
    };
    QuantitiesRow row;
    row.size = size;
    row.delta_min = column(&QuantitiesRow::delta_min);
    row.delta_max = column(&QuantitiesRow::delta_max);
    row.span_min = column(&QuantitiesRow::span_min);
    row.span_max = column(&QuantitiesRow::span_max);
    row.var_min = column(&QuantitiesRow::var_min);
    row.var_max = column(&QuantitiesRow::var_max);
    row.moment_root_max = column(&QuantitiesRow::moment_root_max);
    out.push_back(row);
  }
  return out;
}

// ------------------------------------------------------------------- bounds

namespace {

constexpr const char* kAllocNames[] = {"omega0_star", "omega_star", "omega1_star"};
constexpr const char* kEvalNames[] = {"U0", "U"};

// 3 x 2 grid [alloc][eval] for one MDP.
std::array<std::array<double, 2>, 3> bounds_grid(const TabularMdp& mdp,
                                                 const BoundsCompareOptions& options) {
  const auto sol = value_iteration(mdp);
  const auto q = compute_instance_quantities(mdp, sol, options.k_max);
  const auto in1 = make_bound_inputs(q, sol.greedy, mdp.discount);
  const auto in_sup = make_bound_inputs(q, sol.greedy, mdp.discount, 0.0, KChoice::per_pair_sup());
  const Objective objectives[] = {bound_objective(Bound::kU0, in1),
                                  bound_objective(Bound::kU, in_sup),
                                  bound_objective(Bound::kU1, in1)};
  std::optional<FlowPolytope> polytope;
  if (options.navigation) polytope.emplace(mdp);

  std::array<std::array<double, 2>, 3> grid{};
  for (int i = 0; i < 3; ++i) {
    Allocation w;
    if (options.navigation) {
      NavigationOptions nav;
      nav.iters = options.nav_iters;
      w = minimize_with_navigation(objectives[i], *polytope, nav).allocation;
    } else {
      SimplexOptions simplex;
      simplex.iters = options.iters;
      w = minimize_on_simplex(objectives[i], mdp.n_states, mdp.n_actions, simplex).allocation;
    }
    grid[i][0] = u0(in1, w);
    grid[i][1] = u(in_sup, w);
  }
  return grid;
}

}  // namespace

std::vector<BoundsRow> bounds_compare(const std::string& family, const std::vector<int>& sizes,
                                      double discount, const BoundsCompareOptions& options) {
  std::vector<BoundsRow> out;
  for (int size : sizes) {
    const int draws = family == "random" ? options.draws : 1;
    if (draws < 1) throw std::invalid_argument("draws must be >= 1");
    std::vector<std::array<std::array<double, 2>, 3>> grids(static_cast<std::size_t>(draws));
#pragma omp parallel for schedule(dynamic, 1)
    for (int d = 0; d < draws; ++d) {
      grids[d] = bounds_grid(environment_draw(family, size, discount, options.seed, d), options);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 2; ++j) {
        std::vector<double> cell;
        for (const auto& g : grids) cell.push_back(g[i][j]);
        out.push_back({size, kAllocNames[i], kEvalNames[j], median(std::move(cell))});
      }
    }
  }
  return out;
}

std::string quantities_csv(const std::vector<QuantitiesRow>& rows) {
  std::string out = std::string(kQuantitiesHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.size, format_number(r.delta_min),
                       format_number(r.delta_max), format_number(r.span_min),
                       format_number(r.span_max), format_number(r.var_min),
                       format_number(r.var_max), format_number(r.moment_root_max));
  }
  return out;
}

std::string bounds_csv(const std::vector<BoundsRow>& rows) {
  std::string out = std::string(kBoundsHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.size, r.alloc, r.eval_bound, format_number(r.value));
  }
  return out;
}

void write_quantities_csv(const std::vector<QuantitiesRow>& rows, const std::filesystem::path& path) {
  open_output(path) << quantities_csv(rows);
}

void write_bounds_csv(const std::vector<BoundsRow>& rows, const std::filesystem::path& path) {
  open_output(path) << bounds_csv(rows);
}

}  // namespace bpi
