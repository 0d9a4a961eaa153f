#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bpi/agents.hpp"
#include "bpi/mdp.hpp"

namespace bpi {

/// family is riverswim, forked or random. size counts states; for forked it
/// must be odd (branch length (size + 1) / 2). seed only matters for random,
/// which uses 3 actions.
struct EnvironmentSpec {
  std::string family = "riverswim";
  int size = 5;
  std::uint64_t seed = 0;
};

TabularMdp make_environment(const EnvironmentSpec& spec, double discount);

struct ExperimentConfig {
  EnvironmentSpec environment;
  AgentSpec agent;
  long horizon = 50000;
  long eval_period = 200;
  std::vector<int> seeds{0};
  double discount = 0.99;
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;
};

/// JSON with the ExperimentConfig field names; agent hyperparameters live
/// under agent.hyperparameters. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

/// Stream of one seed: mt19937_64 over seed_seq{master_seed, seed}. Adding
/// seeds never changes the streams of existing ones.
Rng seed_stream(std::uint64_t master_seed, std::uint64_t seed);

struct EvalRow {
  int seed = 0;
  long t = 0;
  double metric = 0.0;
  long min_visits = 0;
  double delta_min_est = 0.0;
};

struct RunRecord {
  int seed = 0;
  std::vector<EvalRow> rows;
  std::vector<int> final_policy;
  long solver_failures = 0;
  std::string error;  // empty on success
};

/// 1 - ||V* - V^pi||_inf / ||V*||_inf.
double evaluate_policy_quality(const TabularMdp& mdp, const ValueSolution& sol,
                               std::span<const int> policy);

RunRecord run_seed(const ExperimentConfig& config, const TabularMdp& mdp,
                   const ValueSolution& sol, int seed);

/// Seeds run in parallel; records come back in config.seeds order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// Writes runs.csv, final_policies.csv and, if any seed failed, failures.csv.
void write_run_outputs(const std::vector<RunRecord>& records, const std::filesystem::path& dir);

inline constexpr const char* kRunsHeader = "seed,t,metric,min_visits,delta_min_est";
inline constexpr const char* kQuantitiesHeader =
    "size,delta_min,delta_max,span_min,span_max,var_min,var_max,moment_root_max";
inline constexpr const char* kBoundsHeader = "size,alloc,eval_bound,value";

struct QuantitiesRow {
  int size = 0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  double span_min = 0.0;
  double span_max = 0.0;
  double var_min = 0.0;
  double var_max = 0.0;
  double moment_root_max = 0.0;
};

/// Summary of one MDP. Extremes run over all state-action pairs, the moment
/// root over k = 1..k_max as well.
QuantitiesRow summarize_quantities(const TabularMdp& mdp, int k_max);

/// One row per size; random rows are column-wise medians over `draws` MDPs.
std::vector<QuantitiesRow> quantities_report(const std::string& family,
                                             const std::vector<int>& sizes, double discount,
                                             int k_max, int draws = 30, std::uint64_t seed = 0);

struct BoundsRow {
  int size = 0;
  std::string alloc;
  std::string eval_bound;
  double value = 0.0;
};

struct BoundsCompareOptions {
  bool navigation = false;
  int iters = 50000;      // simplex solver
  int nav_iters = 2000;   // navigation solver, outer iterations
  int k_max = kDefaultKMax;
  int draws = 30;
  std::uint64_t seed = 0;
};

/// For each size: minimizers omega0_star (U0), omega_star (U with per-pair
/// k_sup) and omega1_star (U1), each evaluated under U0 and U. Random sizes
/// report medians over draws.
std::vector<BoundsRow> bounds_compare(const std::string& family, const std::vector<int>& sizes,
                                      double discount, const BoundsCompareOptions& options = {});

std::string quantities_csv(const std::vector<QuantitiesRow>& rows);
std::string bounds_csv(const std::vector<BoundsRow>& rows);
void write_quantities_csv(const std::vector<QuantitiesRow>& rows, const std::filesystem::path& path);
void write_bounds_csv(const std::vector<BoundsRow>& rows, const std::filesystem::path& path);

/// Shortest decimal form that round-trips, so reruns give identical bytes.
std::string format_number(double value);

}  // namespace bpi
