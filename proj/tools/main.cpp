// axtrade: preprocess -> label -> train -> backtest from one config file.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "axtrade/error.hpp"
#include "axtrade/pipeline/commands.hpp"
#include "axtrade/pipeline/config.hpp"

namespace {

using namespace axtrade;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool parallel = false;
  bool quiet = false;
  std::string baseline;
};

pipeline::RunConfig effective_config(const Globals& g) {
  auto cfg = g.config_path.empty() ? pipeline::RunConfig{} : pipeline::load_config(g.config_path);
  for (const auto& o : g.overrides) pipeline::apply_override(cfg, o);
  if (g.seed) cfg.seeds = {*g.seed};
  pipeline::validate(cfg);
  return cfg;
}

pipeline::CommandOptions options_of(const Globals& g) {
  pipeline::CommandOptions o;
  o.force = g.force;
  o.parallel_seeds = g.parallel;
  if (!g.baseline.empty()) o.baseline = g.baseline;
  o.log = g.quiet ? nullptr : &std::cerr;
  return o;
}

int report_error(const Error& e) {
  std::cerr << "axtrade: " << e.what();
  if (e.line()) std::cerr << " (line " << *e.line() << ')';
  if (e.seed()) std::cerr << " (seed " << *e.seed() << ')';
  std::cerr << '\n';
  return static_cast<int>(exit_code_for(e.kind()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"axtrade: auxiliary-task PPO trading pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("-c,--config", g.config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set ppo.total_timesteps=1200");
  app.add_option("--seed", g.seed, "Run only this seed");
  app.add_flag("--force", g.force, "Replace existing training output");
  app.add_flag("--parallel-seeds", g.parallel, "One thread per seed for train and backtest");
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  auto* preprocess = app.add_subcommand("preprocess", "Split the input CSVs and compute features");
  auto* label = app.add_subcommand("label", "Train the autoencoder and K-Means, label both splits");
  auto* train = app.add_subcommand("train", "PPO training for each configured seed");
  auto* backtest = app.add_subcommand("backtest", "Greedy backtest of every seed checkpoint");
  backtest->add_option("--baseline", g.baseline, "Summary file of a baseline run; adds PPI")->check(CLI::ExistingFile);
  auto* tune = app.add_subcommand("tune", "Random search over autoencoder and K-Means settings");
  auto* dump = app.add_subcommand("config", "Print the effective config");

  pipeline::SimulateRequest sim;
  std::string timing = "next_return";
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Replay a fixed action sequence through the environment");
  simulate->add_option("--data", sim.data, "Candle CSV")->required()->check(CLI::ExistingFile);
  simulate->add_option("--actions", sim.actions, "Action file (-1/0/1 or sell/hold/buy)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--start", sim.start, "First window index");
  simulate->add_option("--spread", sim.env.spread_cost, "Cost per position change");
  simulate->add_option("--timing", timing, "next_return or same_step_return")
      ->check(CLI::IsMember({"next_return", "same_step_return"}));
  simulate->add_option("--window-len", sim.env.window_len, "Steps per observation window");
  simulate->add_option("-o,--out", sim_out, "Output CSV (default stdout)");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print a backtest summary");
  report->add_option("dir", report_dir, "Backtest or run directory (default: from the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    if (*simulate) {
      sim.env.reward_timing =
          timing == "next_return" ? env::RewardTiming::NextReturn : env::RewardTiming::SameStepReturn;
      if (!g.config_path.empty()) sim.csv = effective_config(g).data.csv;
      if (sim_out.empty()) {
        pipeline::cmd_simulate(sim, std::cout);
      } else {
        std::ofstream out(sim_out);
        if (!out) fail(ErrorKind::IoError, "cannot write " + sim_out);
        pipeline::cmd_simulate(sim, out);
      }
      return 0;
    }
    if (*report) {
      const std::filesystem::path dir =
          report_dir.empty() ? pipeline::run_directory(effective_config(g)) : std::filesystem::path(report_dir);
      pipeline::cmd_report(dir, std::cout);
      return 0;
    }

    const auto cfg = effective_config(g);
    const auto opts = options_of(g);
    if (*dump) {
      std::cout << pipeline::config_to_json(cfg);
    } else if (*preprocess) {
      pipeline::cmd_preprocess(cfg, opts);
    } else if (*label) {
      pipeline::cmd_label(cfg, opts);
    } else if (*train) {
      pipeline::cmd_train_all(cfg, opts);
    } else if (*backtest) {
      pipeline::cmd_backtest(cfg, opts);
      pipeline::cmd_report(pipeline::layout_for(cfg).backtest(), std::cout);
    } else if (*tune) {
      pipeline::cmd_tune(cfg, opts);
    }
    if (!*dump) std::cout << pipeline::run_directory(cfg).string() << '\n';
    return 0;
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "axtrade: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  }
}
