#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "axtrade/ppo/network.hpp"
#include "axtrade/trading_env.hpp"

namespace axtrade::backtest {

struct BacktestReport {
  std::vector<double> per_step_rewards;
  std::vector<double> equity_curve;  // running left-to-right sum of rewards
  double total_return = 0.0;
  std::optional<double> sharpe_ratio;  // empty when rewards are constant or too few
  std::uint64_t seed = 0;
  std::size_t first_candle = 0;  // end candle of the first acted window
  std::size_t last_candle = 0;
  std::string checkpoint_hash;
};

struct SeedAggregate {
  std::vector<BacktestReport> per_seed;
  double mean_total_return = 0.0;
  std::optional<double> mean_sharpe;  // empty if any seed lacks a Sharpe ratio
};

// Chooses an action for a window; `episode_start` is true on the first step of each episode.
using PolicyFn = std::function<env::TradeAction(const market::FeatureWindow& window, bool episode_start)>;

// Sequential, non-overlapping episodes covering every actionable window of `data`.
// When train_end is given, data must start strictly after it (OutOfData otherwise).
BacktestReport run_policy(const env::MarketData& data, const env::EnvConfig& config, const PolicyFn& policy,
                          std::optional<market::Timestamp> train_end = std::nullopt);

// Greedy actions; the recurrent state resets at each episode start. Parameters are not touched.
BacktestReport run_backtest(const ppo::PolicyNetwork& net, const env::MarketData& data,
                            const env::EnvConfig& config, std::optional<market::Timestamp> train_end = std::nullopt);

// Uniform random actions from the given seed.
BacktestReport run_random_policy(const env::MarketData& data, const env::EnvConfig& config, std::uint64_t seed);

// mean / population std of per-step rewards, no annualization.
// Errors: TooFewSamples (n < 2), DegenerateReturns (std = 0).
double sharpe_ratio(std::span<const double> rewards);
double mean(std::span<const double> values);
double population_std(std::span<const double> values);

// ((new - original) / |original|) * 100. Errors: ZeroBaseline.
double ppi(double value_new, double value_original);

// Errors: EmptyInput.
SeedAggregate aggregate_seeds(std::vector<BacktestReport> reports);

struct BaselineMetrics {
  double total_return_pct = 0.0;
  double sharpe = 0.0;
};

struct ReportPaths {
  std::filesystem::path equity_csv;
  std::filesystem::path summary;
  std::optional<std::filesystem::path> ppi_table;
};

// Writes equity.csv (`step,seed,cumulative_return`), summary.txt and, with a baseline,
// the PPI block plus ppi_table.txt. Total returns are reported in percent.
ReportPaths emit_report(const SeedAggregate& aggregate, const std::filesystem::path& directory,
                        const std::optional<BaselineMetrics>& baseline = std::nullopt);

// Key-value summary: `[section]` headers and `key=value` lines; '#' starts a comment.
struct Summary {
  std::map<std::string, std::map<std::string, std::string>> sections;  // "" is the top level

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
};
Summary parse_summary(std::string_view text);
Summary read_summary(const std::filesystem::path& path);

// Reads a baseline from a summary file ([mean] section) or top-level
// total_return_pct / sharpe keys.
BaselineMetrics read_baseline(const std::filesystem::path& path);

// Rows "Overall Return" and "Sharpe Ratio" with baseline, new and PPI% columns.
std::string format_ppi_table(const BaselineMetrics& baseline, const BaselineMetrics& current);

}  // namespace axtrade::backtest
