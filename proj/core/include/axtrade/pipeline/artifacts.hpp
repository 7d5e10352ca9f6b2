#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "axtrade/market_data.hpp"
#include "axtrade/pipeline/config.hpp"
#include "axtrade/trading_env.hpp"

namespace axtrade::pipeline {

// out/<config-hash>/<stage>/...
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path preprocess() const { return root / "preprocess"; }
  std::filesystem::path label() const { return root / "label"; }
  std::filesystem::path train(std::uint64_t seed) const { return root / "train" / std::to_string(seed); }
  std::filesystem::path backtest() const { return root / "backtest"; }
  std::filesystem::path tune() const { return root / "tune"; }

  std::filesystem::path candles_csv(std::string_view split) const;
  std::filesystem::path features_csv(std::string_view split) const;
  std::filesystem::path returns_csv(std::string_view split) const;
  std::filesystem::path scaler_csv() const { return preprocess() / "scaler.csv"; }
  std::filesystem::path manifest() const { return preprocess() / "manifest.json"; }
  std::filesystem::path ae_checkpoint() const { return label() / "ae.ckpt"; }
  std::filesystem::path kmeans_model() const { return label() / "kmeans.bin"; }
  std::filesystem::path labels_csv(std::string_view split) const;
  std::filesystem::path policy_checkpoint(std::uint64_t seed) const { return train(seed) / "policy.ckpt"; }
};

RunLayout layout_for(const RunConfig& config);

inline constexpr std::string_view kTrainSplit = "train";
inline constexpr std::string_view kTestSplit = "test";

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories. IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Inclusive bounds; empty strings mean unbounded. EmptyInput if nothing remains.
market::CandleSeries slice_range(const market::CandleSeries& series, const std::string& start,
                                 const std::string& end);

// `timestamp,open,high,low,close` with round-trip precision.
void write_candles_csv(std::ostream& out, const market::CandleSeries& series);

void write_scaler_csv(const std::filesystem::path& path, const market::FeatureScaler& scaler);
market::FeatureScaler read_scaler_csv(const std::filesystem::path& path);

// Normalized candles of one split plus the training-split scaler when standardization is on.
struct SplitData {
  market::CandleSeries candles;
  env::MarketData market;
};
SplitData load_split(const RunLayout& layout, const RunConfig& config, std::string_view split);

// Labels of a split, checked against the split's windows one for one.
std::vector<std::size_t> load_labels(const RunLayout& layout, std::string_view split, const env::MarketData& data);

// config.json echo of the effective config.
void write_config_echo(const std::filesystem::path& directory, const RunConfig& config);

}  // namespace axtrade::pipeline
