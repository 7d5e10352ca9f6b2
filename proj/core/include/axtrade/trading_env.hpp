#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "axtrade/market_data.hpp"

namespace axtrade::env {

enum class TradeAction : int { Sell = -1, Hold = 0, Buy = 1 };

inline constexpr std::size_t kActionCount = 3;

// Policy outputs index actions 0, 1, 2 as Sell, Hold, Buy.
constexpr TradeAction action_from_index(std::size_t index) noexcept {
  return static_cast<TradeAction>(static_cast<int>(index) - 1);
}
constexpr std::size_t action_index(TradeAction a) noexcept { return static_cast<std::size_t>(static_cast<int>(a) + 1); }
constexpr int position_of(TradeAction a) noexcept { return static_cast<int>(a); }

enum class RewardTiming {
  // The action taken on the window ending at candle t earns z_{t+1}.
  NextReturn,
  // Literal reading: earns z_t, already visible in the observation.
  SameStepReturn,
};

struct EnvConfig {
  std::size_t episode_length = 600;
  std::size_t window_len = market::kDefaultWindowLen;
  // Charged once whenever the position differs from the previous step's.
  double spread_cost = 0.0;
  RewardTiming reward_timing = RewardTiming::NextReturn;
};

void validate(const EnvConfig& config);

// Observation windows plus the return series of the same candles.
struct MarketData {
  std::vector<market::FeatureWindow> windows;
  market::ReturnSeries returns;  // returns.z[c - 1] is the return of candle c
  std::vector<market::Timestamp> timestamps;  // per candle; may be empty for synthetic data

  static MarketData from_series(const market::CandleSeries& series, std::size_t window_len,
                                const market::FeatureScaler* scaler = nullptr);

  // Number of windows an action can be taken on under `timing`.
  std::size_t action_steps(RewardTiming timing) const;
  // The return credited to an action on window `index`. OutOfData past the end.
  double reward_return(std::size_t index, RewardTiming timing) const;
};

struct EnvState {
  std::size_t cursor = 0;
  std::size_t steps_in_episode = 0;
  std::size_t episode_start = 0;
  int position = 0;
  bool done = true;
};

struct StepResult {
  const market::FeatureWindow* observation = nullptr;  // points into the environment's data
  double reward = 0.0;
  bool done = false;
  double step_return = 0.0;  // z that was credited
};

class TradingEnv {
 public:
  TradingEnv(const MarketData& data, EnvConfig config);

  // Errors: OutOfData when no action can be taken at start_index.
  const market::FeatureWindow& reset(std::size_t start_index);

  // reward = position * z - spread_cost * [position changed]
  // Errors: EpisodeFinished, OutOfData.
  StepResult step(TradeAction action);

  const EnvState& state() const noexcept { return state_; }
  const EnvConfig& config() const noexcept { return config_; }
  const MarketData& data() const noexcept { return *data_; }
  std::size_t action_steps() const noexcept { return action_steps_; }
  const market::FeatureWindow& observation() const;

  // Uniform start among positions where a full episode fits (0 when none does).
  std::size_t random_start(std::mt19937_64& rng) const;

 private:
  const MarketData* data_;
  EnvConfig config_;
  std::size_t action_steps_;
  EnvState state_;
};

// Sum of rewards, accumulated left to right.
double episode_return(std::span<const double> rewards);

struct ReplayRow {
  std::size_t window_index = 0;
  std::size_t candle_index = 0;
  TradeAction action = TradeAction::Hold;
  double step_return = 0.0;
  double reward = 0.0;
};

// Replays fixed actions from start_index as one uninterrupted episode, stopping at
// whichever of the actions or the data runs out first.
std::vector<ReplayRow> replay_actions(const MarketData& data, EnvConfig config, std::size_t start_index,
                                      std::span<const TradeAction> actions);

}  // namespace axtrade::env
