#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "axtrade/backtest.hpp"
#include "axtrade/market_data.hpp"
#include "axtrade/pipeline/artifacts.hpp"
#include "axtrade/pipeline/config.hpp"
#include "axtrade/pipeline/tuner.hpp"
#include "axtrade/trading_env.hpp"

namespace axtrade::pipeline {

struct CommandOptions {
  bool force = false;           // train: replace an existing seed directory
  bool parallel_seeds = false;  // train/backtest: one thread per seed
  std::optional<std::filesystem::path> baseline;  // backtest: adds the PPI block
  std::ostream* log = nullptr;  // progress lines; null is silent
};

struct SplitManifest {
  std::string source;
  std::string source_hash;
  std::size_t input_rows = 0;
  std::size_t feature_rows = 0;
  std::size_t window_count = 0;
  std::string first_timestamp;
  std::string last_timestamp;
};

struct Manifest {
  SplitManifest train;
  SplitManifest test;
  std::map<std::string, std::string> file_hashes;  // file name in preprocess/ -> content hash
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);

// Loads and splits the input CSVs, writes normalized candles, features, returns,
// the scaler (if standardizing), manifest.json and config.json.
Manifest cmd_preprocess(const RunConfig& config, const CommandOptions& options = {});

// Trains the autoencoder and K-Means on the training split and labels both splits.
axt::AutoencoderHistory cmd_label(const RunConfig& config, const CommandOptions& options = {});

// One PPO run. AlreadyExists when the seed directory holds results and force is off.
std::vector<ppo::TrainingLogRow> cmd_train(const RunConfig& config, std::uint64_t seed,
                                           const CommandOptions& options = {});
// Every configured seed, sequentially or one thread each.
void cmd_train_all(const RunConfig& config, const CommandOptions& options = {});

// Errors: MissingCheckpoint (with the seed) before any work starts.
backtest::SeedAggregate cmd_backtest(const RunConfig& config, const CommandOptions& options = {});

struct SimulateRequest {
  std::filesystem::path data;     // raw candle CSV
  std::filesystem::path actions;  // -1/0/1 or sell/hold/buy, separated by whitespace or commas
  std::size_t start = 0;
  market::CsvFormat csv;
  env::EnvConfig env;
};

std::vector<env::TradeAction> parse_actions(std::string_view text);

// Replays the actions and prints `step,window_end_index,action,z,reward,cumulative`.
std::vector<env::ReplayRow> cmd_simulate(const SimulateRequest& request, std::ostream& out);

// Random search on the training split. Writes trials.csv, best_params.json and trial_NNN/.
TuneOutcome cmd_tune(const RunConfig& config, const CommandOptions& options = {});

// Prints per-seed and mean results (plus the PPI table when present) from a backtest
// directory or a run directory containing one.
void cmd_report(const std::filesystem::path& directory, std::ostream& out);

}  // namespace axtrade::pipeline
