#include "axtrade/ppo/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "axtrade/error.hpp"
#include "axtrade/market_data.hpp"

namespace axtrade::ppo {

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x41585452u};
  return std::mt19937_64(seq);
}

void validate(const PPOConfig& c) {
  if (!(c.clip_epsilon > 0.0 && c.clip_epsilon < 1.0)) fail(ErrorKind::ConfigError, "clip_epsilon must be in (0, 1)");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail(ErrorKind::ConfigError, "gamma must be in (0, 1]");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) fail(ErrorKind::ConfigError, "gae_lambda must be in [0, 1]");
  if (c.aux_loss_weight < 0.0 || c.value_loss_weight < 0.0 || c.entropy_coefficient < 0.0) {
    fail(ErrorKind::ConfigError, "loss weights must be >= 0");
  }
  if (c.rollout_length == 0 || c.minibatch_size == 0 || c.epochs_per_update == 0) {
    fail(ErrorKind::ConfigError, "rollout_length, minibatch_size and epochs_per_update must be positive");
  }
  if (c.total_timesteps < c.rollout_length) fail(ErrorKind::ConfigError, "total_timesteps below one rollout");
  if (!(c.learning_rate > 0.0)) fail(ErrorKind::ConfigError, "learning_rate must be positive");
}

void write_log_row(std::ostream& out, const TrainingLogRow& r) {
  using market::format_double;
  out << r.timestep << ',' << format_double(r.mean_reward) << ',' << format_double(r.policy_loss) << ','
      << format_double(r.value_loss) << ',' << format_double(r.aux_loss) << ',' << format_double(r.entropy) << ','
      << format_double(r.clip_fraction) << '\n';
}

PpoTrainer::PpoTrainer(const env::MarketData& data, std::span<const std::size_t> labels, env::EnvConfig env_config,
                       PPOConfig config, NetworkShape shape, std::uint64_t seed)
    : data_(&data),
      labels_(labels.begin(), labels.end()),
      env_config_(env_config),
      config_(config),
      seed_(seed),
      net_(shape, seed),
      optimizer_(nn::AdamConfig{config.learning_rate}),
      env_(data, env_config),
      start_rng_(derive_rng(seed, 1)),
      action_rng_(derive_rng(seed, 2)),
      shuffle_rng_(derive_rng(seed, 3)),
      state_(net_.initial_state()) {
  validate(config_);
  if (labels_.size() != data.windows.size()) {
    fail(ErrorKind::ShapeMismatch, std::to_string(labels_.size()) + " labels for " +
                                       std::to_string(data.windows.size()) + " windows");
  }
  for (auto l : labels_) {
    if (l >= shape.aux_classes) fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(l));
  }
  if (env_.action_steps() == 0) fail(ErrorKind::OutOfData, "training data has no actionable step");
}

RolloutBuffer PpoTrainer::collect_rollout() {
  RolloutBuffer buf;
  buf.steps.reserve(config_.rollout_length);
  for (std::size_t t = 0; t < config_.rollout_length; ++t) {
    RolloutStep s;
    if (needs_reset_) {
      env_.reset(env_.random_start(start_rng_));
      state_ = net_.initial_state();
      needs_reset_ = false;
      s.reset_before = true;
    }
    const std::size_t index = env_.state().cursor;
    const auto& window = env_.data().windows[index];
    const auto out = act(net_, window.values, state_, ActMode::Sample, &action_rng_);
    const auto step = env_.step(env::action_from_index(out.action));

    s.observation = Eigen::Map<const Vector>(window.values.data(), static_cast<Eigen::Index>(window.values.size()));
    s.action = out.action;
    s.log_prob = out.log_prob;
    s.reward = step.reward;
    s.value = out.value;
    s.label = labels_[index];
    s.done = step.done;
    s.state_before = state_;
    buf.steps.push_back(std::move(s));

    state_ = out.next_state;
    if (step.done) needs_reset_ = true;
  }
  if (needs_reset_) {
    buf.bootstrap_value = 0.0;
  } else {
    const auto& window = env_.observation();
    buf.bootstrap_value = act(net_, window.values, state_, ActMode::Greedy).value;
  }
  timesteps_ += buf.size();
  return buf;
}

UpdateStats PpoTrainer::update(const RolloutBuffer& buffer) {
  auto est = compute_gae(buffer, config_.gamma, config_.gae_lambda);
  normalize_advantages(est.advantages);

  std::vector<std::size_t> chunk_starts;
  for (std::size_t s = 0; s < buffer.size(); s += config_.minibatch_size) chunk_starts.push_back(s);

  const auto weights = config_.loss_weights();
  auto params = net_.parameters();
  UpdateStats stats;
  for (std::size_t epoch = 0; epoch < config_.epochs_per_update; ++epoch) {
    std::shuffle(chunk_starts.begin(), chunk_starts.end(), shuffle_rng_);
    for (const std::size_t start : chunk_starts) {
      Minibatch mb{&buffer, est.advantages, est.returns, start, std::min(start + config_.minibatch_size, buffer.size())};
      nn::zero_grads(params);
      const auto lb = composite_loss(net_, mb, weights, true);
      nn::clip_grad_norm(params, config_.max_grad_norm);
      optimizer_.step(params);
      stats.total_loss += lb.total;
      stats.policy_loss += lb.policy_loss;
      stats.value_loss += lb.value_loss;
      stats.aux_loss += lb.aux_loss;
      stats.entropy += lb.entropy;
      stats.clip_fraction += lb.clip_fraction;
      ++stats.minibatches;
    }
  }
  for (const auto* p : params) nn::require_finite(p->value, p->name);
  const double n = static_cast<double>(stats.minibatches);
  stats.total_loss /= n;
  stats.policy_loss /= n;
  stats.value_loss /= n;
  stats.aux_loss /= n;
  stats.entropy /= n;
  stats.clip_fraction /= n;
  return stats;
}

std::vector<TrainingLogRow> PpoTrainer::train(const std::function<void(const TrainingLogRow&)>& on_row,
                                              const CheckpointHook& on_checkpoint) {
  std::vector<TrainingLogRow> log;
  const std::size_t updates = config_.update_count();
  for (std::size_t u = 0; u < updates; ++u) {
    const auto buffer = collect_rollout();
    UpdateStats stats;
    try {
      stats = update(buffer);
    } catch (const Error& e) {
      throw Error(e.kind(), "update " + std::to_string(updates_ + 1) + " at timestep " + std::to_string(timesteps_) +
                                ": " + e.what());
    }
    ++updates_;
    double reward_sum = 0.0;
    for (const auto& s : buffer.steps) reward_sum += s.reward;
    TrainingLogRow row{timesteps_,       reward_sum / static_cast<double>(buffer.size()),
                       stats.policy_loss, stats.value_loss,
                       stats.aux_loss,    stats.entropy,
                       stats.clip_fraction};
    log.push_back(row);
    if (on_row) on_row(row);
    if (on_checkpoint && config_.checkpoint_every > 0 && updates_ % config_.checkpoint_every == 0 &&
        u + 1 < updates) {
      on_checkpoint(updates_, *this);
    }
  }
  return log;
}

}  // namespace axtrade::ppo
