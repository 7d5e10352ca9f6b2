#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "axtrade/axt/autoencoder.hpp"
#include "axtrade/axt/kmeans.hpp"
#include "axtrade/market_data.hpp"
#include "axtrade/ppo/network.hpp"
#include "axtrade/ppo/trainer.hpp"
#include "axtrade/trading_env.hpp"

namespace axtrade::pipeline {

struct DataConfig {
  std::string train_csv;
  std::string test_csv;  // may name the same file as train_csv when ranges split it
  // Inclusive timestamp bounds; empty means unbounded.
  std::string train_start;
  std::string train_end;
  std::string test_start;
  std::string test_end;
  market::CsvFormat csv;
  std::size_t window_len = market::kDefaultWindowLen;
  bool zscore = false;  // standardize features with training-split statistics
};

struct AxtSettings {
  axt::AutoencoderConfig autoencoder;
  axt::KMeansConfig kmeans;
  std::uint64_t seed = 30;
};

enum class TuneObjective { AeReconstructionMse, KMeansSilhouette };

struct TuneSpec {
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::vector<std::size_t> batch_sizes = {16, 32, 64, 128};
  std::pair<double, double> learning_rate = {1e-5, 1e-2};  // log-uniform
  std::pair<std::size_t, std::size_t> latent_dim = {4, 16};
  std::pair<std::size_t, std::size_t> k = {4, 16};
  TuneObjective objective = TuneObjective::AeReconstructionMse;
  std::size_t epochs = 10;
  std::size_t max_points = 1000;  // silhouette subsample
};

struct NetworkSettings {
  std::size_t lstm_hidden = 128;
  std::vector<std::size_t> fc = {32, 64, 64};
};

struct RunConfig {
  DataConfig data;
  AxtSettings axt;
  env::EnvConfig env;
  ppo::PPOConfig ppo;
  NetworkSettings network;
  std::vector<std::uint64_t> seeds = {30, 50, 70, 99};
  std::string output_dir;  // empty: $AXTRADE_OUT, else "out"
  TuneSpec tune;

  ppo::NetworkShape network_shape() const;
};

// Throws ConfigError on invalid combinations.
void validate(const RunConfig& config);

// JSON text <-> config. Unknown keys are rejected; missing keys keep their defaults.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// `dotted.key=value` override; value parsed as JSON when possible, else taken as a string.
void apply_override(RunConfig& config, const std::string& assignment);

// Hash of the effective config, excluding output_dir.
std::string config_hash(const RunConfig& config);

std::filesystem::path output_root(const RunConfig& config);
// output_root / config_hash
std::filesystem::path run_directory(const RunConfig& config);

}  // namespace axtrade::pipeline
