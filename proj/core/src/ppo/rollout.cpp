#include "axtrade/ppo/rollout.hpp"

#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::ppo {

AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                              double gae_lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) fail(ErrorKind::EmptyBuffer, "advantage estimation on an empty buffer");
  if (values.size() != n || dones.size() != n) fail(ErrorKind::ShapeMismatch, "rollout columns differ in length");
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 == n ? bootstrap_value : values[t + 1];
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
    running = delta + gamma * gae_lambda * nonterminal * running;
    out.advantages[t] = running;
  }
  for (std::size_t t = 0; t < n; ++t) out.returns[t] = out.advantages[t] + values[t];
  return out;
}

AdvantageEstimate compute_gae(const RolloutBuffer& buffer, double gamma, double gae_lambda) {
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  rewards.reserve(buffer.size());
  values.reserve(buffer.size());
  dones.reserve(buffer.size());
  for (const auto& s : buffer.steps) {
    rewards.push_back(s.reward);
    values.push_back(s.value);
    dones.push_back(s.done ? 1 : 0);
  }
  return compute_gae(rewards, values, dones, buffer.bootstrap_value, gamma, gae_lambda);
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : advantages) {
    a -= mean;
    if (sd > 0.0) a /= sd;
  }
}

}  // namespace axtrade::ppo
