#pragma once

#include <span>
#include <vector>

#include "axtrade/ppo/network.hpp"
#include "axtrade/ppo/rollout.hpp"

namespace axtrade::ppo {

// min(r A, clip(r, 1 - eps, 1 + eps) A) with r = exp(log_prob_new - log_prob_old).
double ppo_clip_objective(double log_prob_new, double log_prob_old, double advantage, double clip_epsilon);

// Mean of -log(probs[label]) over columns of a (classes x n) probability matrix.
// Errors: LabelOutOfRange.
double auxiliary_loss(const Matrix& probabilities, std::span<const std::size_t> labels);
double auxiliary_loss(const Vector& probabilities, std::size_t label);

// Mean squared error. Errors: ShapeMismatch.
double value_loss(std::span<const double> estimates, std::span<const double> targets);

// Shannon entropy (nats) of one distribution.
double entropy(const Vector& probabilities);

struct LossWeights {
  double clip_epsilon = 0.2;
  double value_loss_weight = 0.5;
  double aux_loss_weight = 0.5;
  double entropy_coefficient = 0.01;
};

// A contiguous slice [begin, end) of a rollout with its advantage targets.
struct Minibatch {
  const RolloutBuffer* buffer = nullptr;
  std::span<const double> advantages;  // indexed like buffer->steps
  std::span<const double> returns;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

struct LossBreakdown {
  double total = 0.0;
  double policy_loss = 0.0;  // -mean clipped objective
  double value_loss = 0.0;
  double aux_loss = 0.0;     // mean cross-entropy; 0 when the aux weight is 0
  double entropy = 0.0;      // mean policy entropy
  double clip_fraction = 0.0;
  std::vector<double> ratios;
  std::vector<double> objectives;
};

// total = policy_loss + value_w * value_loss + aux_w * aux_loss - entropy_c * entropy.
// Replays the slice from its stored recurrent state. With accumulate_gradients the
// parameter gradients of `total` are added to the network's grad buffers; an aux weight
// of 0 removes the aux head from both the loss and the backward pass.
LossBreakdown composite_loss(PolicyNetwork& net, const Minibatch& batch, const LossWeights& weights,
                             bool accumulate_gradients);

}  // namespace axtrade::ppo
