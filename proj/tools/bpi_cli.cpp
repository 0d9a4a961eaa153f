// Command-line front end: instance tables, bound comparisons, agent runs and plots.

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>

#include "bpi/harness.hpp"
#include "bpi/plot.hpp"

namespace {

void emit(const std::string& csv, const std::string& out) {
  if (out.empty()) {
    std::cout << csv;
    return;
  }
  const std::filesystem::path path(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance-specific exploration bounds and best-policy-identification agents"};
  app.require_subcommand(1);

  std::string env = "riverswim";
  std::vector<int> sizes{5};
  double gamma = 0.95;
  int kmax = bpi::kDefaultKMax;
  int draws = 30;
  std::uint64_t seed = 0;
  std::string out;

  auto add_env_options = [&](CLI::App* cmd) {
    cmd->add_option("--env", env, "riverswim, forked or random")
        ->check(CLI::IsMember({"riverswim", "forked", "random"}));
    cmd->add_option("--sizes", sizes, "state counts (forked: odd)")->expected(1, -1);
    cmd->add_option("--gamma", gamma, "discount factor");
    cmd->add_option("--draws", draws, "random MDP draws per size (medians reported)");
    cmd->add_option("--seed", seed, "seed for random MDP draws");
    cmd->add_option("--out", out, "output CSV (default: stdout)");
  };

  auto* quantities = app.add_subcommand("quantities", "instance-specific quantity table");
  add_env_options(quantities);
  quantities->add_option("--kmax", kmax, "largest moment order k");

  auto* compare = app.add_subcommand("bounds-compare", "cross-evaluate U0/U/U1 minimizers");
  add_env_options(compare);
  bool navigation = false;
  int iters = bpi::BoundsCompareOptions{}.iters;
  int nav_iters = bpi::BoundsCompareOptions{}.nav_iters;
  compare->add_option("--kmax", kmax, "largest moment order k");
  compare->add_flag("--navigation", navigation, "minimize over the navigation polytope");
  compare->add_option("--iters", iters, "simplex solver iterations");
  compare->add_option("--nav-iters", nav_iters, "navigation solver outer iterations");

  auto* run = app.add_subcommand("run", "run an agent experiment from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "experiment config")->required();

  auto* plot = app.add_subcommand("plot", "render SVG plots from a harness CSV");
  std::string input;
  std::string out_dir;
  plot->add_option("--input", input, "runs, quantities or bounds CSV")->required();
  plot->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*quantities) {
      emit(bpi::quantities_csv(bpi::quantities_report(env, sizes, gamma, kmax, draws, seed)), out);
    } else if (*compare) {
      bpi::BoundsCompareOptions options;
      options.navigation = navigation;
      options.iters = iters;
      options.nav_iters = nav_iters;
      options.k_max = kmax;
      options.draws = draws;
      options.seed = seed;
      emit(bpi::bounds_csv(bpi::bounds_compare(env, sizes, gamma, options)), out);
    } else if (*run) {
      const auto config = bpi::load_config(config_path);
      const auto records = bpi::run_experiment(config);
      bpi::write_run_outputs(records, config.output_dir);
      int failed = 0;
      for (const auto& rec : records) {
        if (!rec.error.empty()) {
          ++failed;
          std::cerr << "seed " << rec.seed << " failed: " << rec.error << '\n';
        } else if (!rec.rows.empty()) {
          std::cout << "seed " << rec.seed << " final metric "
                    << bpi::format_number(rec.rows.back().metric);
          if (rec.solver_failures > 0) std::cout << " (" << rec.solver_failures << " solver failures)";
          std::cout << '\n';
        }
      }
      std::cout << "wrote " << config.output_dir << "/runs.csv\n";
      return failed == static_cast<int>(records.size()) ? 1 : 0;
    } else if (*plot) {
      for (const auto& path : bpi::render_plots(input, out_dir)) {
        std::cout << "wrote " << path.string() << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
