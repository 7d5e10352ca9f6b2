#include "axtrade/trading_env.hpp"

#include <algorithm>
#include <string>

#include "axtrade/error.hpp"

namespace axtrade::env {

void validate(const EnvConfig& config) {
  if (config.episode_length < 1) fail(ErrorKind::ConfigError, "episode_length must be >= 1");
  if (config.window_len < 1) fail(ErrorKind::ConfigError, "window_len must be >= 1");
  if (!(config.spread_cost >= 0.0)) fail(ErrorKind::ConfigError, "spread_cost must be >= 0");
}

MarketData MarketData::from_series(const market::CandleSeries& series, std::size_t window_len,
                                   const market::FeatureScaler* scaler) {
  auto features = market::compute_features(series);
  if (scaler) features = scaler->apply(features);
  MarketData data;
  data.windows = market::build_windows(features, window_len);
  data.returns = market::compute_returns(series);
  data.timestamps.reserve(series.size());
  for (const auto& c : series.candles) data.timestamps.push_back(c.timestamp);
  return data;
}

std::size_t MarketData::action_steps(RewardTiming timing) const {
  std::size_t n = 0;
  for (const auto& w : windows) {
    const bool ok = timing == RewardTiming::NextReturn ? w.end_index < returns.z.size()
                                                       : w.end_index >= 1 && w.end_index - 1 < returns.z.size();
    if (!ok) break;
    ++n;
  }
  return n;
}

double MarketData::reward_return(std::size_t index, RewardTiming timing) const {
  if (index >= windows.size()) fail(ErrorKind::OutOfData, "window " + std::to_string(index) + " past the data");
  const std::size_t end = windows[index].end_index;
  const std::size_t z_index = timing == RewardTiming::NextReturn ? end : end - 1;
  if (end == 0 || z_index >= returns.z.size()) {
    fail(ErrorKind::OutOfData, "no return for window " + std::to_string(index));
  }
  return returns.z[z_index];
}

TradingEnv::TradingEnv(const MarketData& data, EnvConfig config)
    : data_(&data), config_(config), action_steps_(data.action_steps(config.reward_timing)) {
  validate(config_);
}

const market::FeatureWindow& TradingEnv::reset(std::size_t start_index) {
  if (start_index >= action_steps_) {
    fail(ErrorKind::OutOfData, "start index " + std::to_string(start_index) + " leaves no step (" +
                                   std::to_string(action_steps_) + " available)");
  }
  state_ = EnvState{start_index, 0, start_index, 0, false};
  return data_->windows[start_index];
}

const market::FeatureWindow& TradingEnv::observation() const {
  return data_->windows[std::min(state_.cursor, data_->windows.size() - 1)];
}

StepResult TradingEnv::step(TradeAction action) {
  if (state_.done) fail(ErrorKind::EpisodeFinished, "step called on a finished episode; reset first");
  if (state_.cursor >= action_steps_) fail(ErrorKind::OutOfData, "no return after cursor");
  const double z = data_->reward_return(state_.cursor, config_.reward_timing);
  const int pos = position_of(action);
  StepResult r;
  r.step_return = z;
  r.reward = static_cast<double>(pos) * z;
  if (pos != state_.position) r.reward -= config_.spread_cost;
  state_.position = pos;
  ++state_.cursor;
  ++state_.steps_in_episode;
  state_.done = state_.steps_in_episode >= config_.episode_length || state_.cursor >= action_steps_;
  r.done = state_.done;
  r.observation = &observation();
  return r;
}

std::size_t TradingEnv::random_start(std::mt19937_64& rng) const {
  if (action_steps_ <= config_.episode_length) return 0;
  std::uniform_int_distribution<std::size_t> dist(0, action_steps_ - config_.episode_length);
  return dist(rng);
}

double episode_return(std::span<const double> rewards) {
  double s = 0.0;
  for (double r : rewards) s += r;
  return s;
}

std::vector<ReplayRow> replay_actions(const MarketData& data, EnvConfig config, std::size_t start_index,
                                      std::span<const TradeAction> actions) {
  config.episode_length = std::numeric_limits<std::size_t>::max();
  TradingEnv env(data, config);
  std::vector<ReplayRow> rows;
  if (actions.empty()) return rows;
  env.reset(start_index);
  for (const TradeAction a : actions) {
    const std::size_t index = env.state().cursor;
    const auto r = env.step(a);
    rows.push_back({index, data.windows[index].end_index, a, r.step_return, r.reward});
    if (r.done) break;
  }
  return rows;
}

}  // namespace axtrade::env
