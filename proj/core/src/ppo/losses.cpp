#include "axtrade/ppo/losses.hpp"

#include <algorithm>
#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::ppo {

double ppo_clip_objective(double log_prob_new, double log_prob_old, double advantage, double clip_epsilon) {
  if (!std::isfinite(log_prob_new) || !std::isfinite(log_prob_old) || !std::isfinite(advantage)) {
    fail(ErrorKind::NonFiniteValue, "clip objective input");
  }
  const double r = std::exp(log_prob_new - log_prob_old);
  const double clipped = std::clamp(r, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(r * advantage, clipped * advantage);
}

double auxiliary_loss(const Vector& probabilities, std::size_t label) {
  if (label >= static_cast<std::size_t>(probabilities.size())) {
    fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " with " +
                                         std::to_string(probabilities.size()) + " classes");
  }
  return -std::log(probabilities(static_cast<Eigen::Index>(label)));
}

double auxiliary_loss(const Matrix& probabilities, std::span<const std::size_t> labels) {
  if (static_cast<std::size_t>(probabilities.cols()) != labels.size()) {
    fail(ErrorKind::ShapeMismatch, "one label per column required");
  }
  if (labels.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    s += auxiliary_loss(Vector(probabilities.col(static_cast<Eigen::Index>(j))), labels[j]);
  }
  return s / static_cast<double>(labels.size());
}

double value_loss(std::span<const double> estimates, std::span<const double> targets) {
  if (estimates.size() != targets.size()) fail(ErrorKind::ShapeMismatch, "value estimates vs targets");
  if (estimates.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) s += (estimates[i] - targets[i]) * (estimates[i] - targets[i]);
  return s / static_cast<double>(estimates.size());
}

double entropy(const Vector& probabilities) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

LossBreakdown composite_loss(PolicyNetwork& net, const Minibatch& batch, const LossWeights& weights,
                             bool accumulate_gradients) {
  if (!batch.buffer || batch.begin >= batch.end || batch.end > batch.buffer->size()) {
    fail(ErrorKind::EmptyBuffer, "minibatch slice is empty or out of range");
  }
  const auto& steps = batch.buffer->steps;
  const std::size_t T = batch.size();
  const auto input = static_cast<Eigen::Index>(net.shape().input);

  Matrix obs(input, static_cast<Eigen::Index>(T));
  std::vector<std::uint8_t> resets(T, 0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& s = steps[batch.begin + t];
    if (s.observation.size() != input) fail(ErrorKind::ShapeMismatch, "rollout observation size");
    obs.col(static_cast<Eigen::Index>(t)) = s.observation;
    // The first step's entering state is supplied directly.
    resets[t] = t > 0 && s.reset_before ? 1 : 0;
  }
  const auto out = net.forward(obs, steps[batch.begin].state_before, resets);
  const Matrix policy_logp = nn::log_softmax(out.policy_logits);
  const bool use_aux = weights.aux_loss_weight != 0.0;
  const Matrix aux_logp = use_aux ? nn::log_softmax(out.aux_logits) : Matrix();

  const double inv_t = 1.0 / static_cast<double>(T);
  Matrix g_policy = Matrix::Zero(policy_logp.rows(), policy_logp.cols());
  Matrix g_aux = use_aux ? Matrix::Zero(aux_logp.rows(), aux_logp.cols()) : Matrix();
  Vector g_value(static_cast<Eigen::Index>(T));

  LossBreakdown lb;
  lb.ratios.resize(T);
  lb.objectives.resize(T);
  double obj_sum = 0.0, v_sum = 0.0, ce_sum = 0.0, h_sum = 0.0;
  std::size_t clipped = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto j = static_cast<Eigen::Index>(t);
    const auto& s = steps[batch.begin + t];
    const double adv = batch.advantages[batch.begin + t];
    const double ret = batch.returns[batch.begin + t];
    const auto a = static_cast<Eigen::Index>(s.action);
    if (a >= policy_logp.rows()) fail(ErrorKind::ShapeMismatch, "rollout action index");

    const double lp_new = policy_logp(a, j);
    const double r = std::exp(lp_new - s.log_prob);
    const double obj = ppo_clip_objective(lp_new, s.log_prob, adv, weights.clip_epsilon);
    lb.ratios[t] = r;
    lb.objectives[t] = obj;
    obj_sum += obj;
    if (std::abs(r - 1.0) > weights.clip_epsilon) ++clipped;

    const Vector p = policy_logp.col(j).array().exp().matrix();
    const double h = entropy(p);
    h_sum += h;

    // d(-obj)/d logits: the unclipped branch carries r A (e_a - p); the clipped branch is flat.
    const double d_lp = r * adv <= std::clamp(r, 1.0 - weights.clip_epsilon, 1.0 + weights.clip_epsilon) * adv
                            ? -r * adv * inv_t
                            : 0.0;
    g_policy.col(j) = -d_lp * p;
    g_policy(a, j) += d_lp;
    // d(-c H)/d logits_k = c p_k (log p_k + H)
    g_policy.col(j).array() +=
        weights.entropy_coefficient * inv_t * p.array() * (policy_logp.col(j).array() + h);

    const double v = out.values(j);
    v_sum += (v - ret) * (v - ret);
    g_value(j) = weights.value_loss_weight * 2.0 * (v - ret) * inv_t;

    if (use_aux) {
      const auto label = static_cast<Eigen::Index>(s.label);
      if (label >= aux_logp.rows()) fail(ErrorKind::LabelOutOfRange, "cluster label " + std::to_string(s.label));
      ce_sum -= aux_logp(label, j);
      g_aux.col(j) = weights.aux_loss_weight * inv_t * aux_logp.col(j).array().exp().matrix();
      g_aux(label, j) -= weights.aux_loss_weight * inv_t;
    }
  }
  lb.policy_loss = -obj_sum * inv_t;
  lb.value_loss = v_sum * inv_t;
  lb.aux_loss = use_aux ? ce_sum * inv_t : 0.0;
  lb.entropy = h_sum * inv_t;
  lb.clip_fraction = static_cast<double>(clipped) * inv_t;
  lb.total = lb.policy_loss + weights.value_loss_weight * lb.value_loss + weights.aux_loss_weight * lb.aux_loss -
             weights.entropy_coefficient * lb.entropy;
  if (!std::isfinite(lb.total)) fail(ErrorKind::NonFiniteValue, "composite PPO loss");

  if (accumulate_gradients) net.backward(g_policy, use_aux ? &g_aux : nullptr, g_value);
  return lb;
}

}  // namespace axtrade::ppo
