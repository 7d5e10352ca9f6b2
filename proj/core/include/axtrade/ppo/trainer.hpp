#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "axtrade/nn/adam.hpp"
#include "axtrade/ppo/losses.hpp"
#include "axtrade/ppo/network.hpp"
#include "axtrade/ppo/rollout.hpp"
#include "axtrade/trading_env.hpp"

namespace axtrade::ppo {

struct PPOConfig {
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double aux_loss_weight = 0.5;
  double value_loss_weight = 0.5;
  double entropy_coefficient = 0.01;
  std::size_t epochs_per_update = 4;
  std::size_t minibatch_size = 32;
  std::size_t rollout_length = 600;
  std::size_t total_timesteps = 1'000'000;
  double learning_rate = 0.0000879678;
  double max_grad_norm = 0.5;  // 0 disables clipping
  std::size_t checkpoint_every = 10;  // updates between periodic checkpoints; 0 = final only

  LossWeights loss_weights() const {
    return {clip_epsilon, value_loss_weight, aux_loss_weight, entropy_coefficient};
  }
  std::size_t update_count() const { return rollout_length ? total_timesteps / rollout_length : 0; }
};

void validate(const PPOConfig& config);

struct UpdateStats {
  double total_loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double aux_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  std::size_t minibatches = 0;
};

struct TrainingLogRow {
  std::size_t timestep = 0;
  double mean_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double aux_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

inline constexpr const char* kTrainingLogHeader =
    "timestep,mean_reward,policy_loss,value_loss,aux_loss,entropy,clip_fraction";
void write_log_row(std::ostream& out, const TrainingLogRow& row);

// One training run: owns the network, optimizer, environment and all random streams,
// each derived from the run seed.
class PpoTrainer {
 public:
  PpoTrainer(const env::MarketData& data, std::span<const std::size_t> labels, env::EnvConfig env_config,
             PPOConfig config, NetworkShape shape, std::uint64_t seed);

  // Acts rollout_length steps (sampled actions), resetting the environment and the
  // recurrent state at episode ends.
  RolloutBuffer collect_rollout();

  // epochs_per_update passes over shuffled contiguous minibatches.
  UpdateStats update(const RolloutBuffer& buffer);

  using CheckpointHook = std::function<void(std::size_t update_index, PpoTrainer&)>;
  // Runs update_count() rollout/update rounds. `on_row` is called after every update,
  // `on_checkpoint` every checkpoint_every updates.
  std::vector<TrainingLogRow> train(const std::function<void(const TrainingLogRow&)>& on_row = {},
                                    const CheckpointHook& on_checkpoint = {});

  PolicyNetwork& network() noexcept { return net_; }
  nn::Adam& optimizer() noexcept { return optimizer_; }
  const PPOConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t timesteps() const noexcept { return timesteps_; }

 private:
  const env::MarketData* data_;
  std::vector<std::size_t> labels_;
  env::EnvConfig env_config_;
  PPOConfig config_;
  std::uint64_t seed_;
  PolicyNetwork net_;
  nn::Adam optimizer_;
  env::TradingEnv env_;
  std::mt19937_64 start_rng_;
  std::mt19937_64 action_rng_;
  std::mt19937_64 shuffle_rng_;
  nn::LstmState state_;
  bool needs_reset_ = true;
  std::size_t timesteps_ = 0;
  std::size_t updates_ = 0;
};

// Independent stream for a (seed, purpose) pair.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace axtrade::ppo
