#pragma once

#include <span>
#include <vector>

#include "axtrade/nn/lstm.hpp"

namespace axtrade::ppo {

struct RolloutStep {
  nn::Vector observation;
  std::size_t action = 0;
  double log_prob = 0.0;  // under the policy that collected the step
  double reward = 0.0;
  double value = 0.0;
  std::size_t label = 0;  // cluster id of the observed window
  bool done = false;      // episode ended after this step
  bool reset_before = false;
  nn::LstmState state_before;  // recurrent state entering this step
};

struct RolloutBuffer {
  std::vector<RolloutStep> steps;
  double bootstrap_value = 0.0;  // V of the state after the last step (0 when it is terminal)

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
};

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values, before any normalization
};

// Generalized advantage estimation. A done flag stops both bootstrapping and the
// lambda-recursion at that step. Errors: EmptyBuffer.
AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                              double gae_lambda);
AdvantageEstimate compute_gae(const RolloutBuffer& buffer, double gamma, double gae_lambda);

// Shifts to zero mean and scales to unit population std. Constant input is only centred.
void normalize_advantages(std::vector<double>& advantages);

}  // namespace axtrade::ppo
