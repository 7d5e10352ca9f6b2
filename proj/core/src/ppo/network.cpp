#include "axtrade/ppo/network.hpp"

#include <cmath>
#include <sstream>

#include "axtrade/error.hpp"
#include "axtrade/market_data.hpp"

namespace axtrade::ppo {
namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

const std::string& meta(const nn::Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) fail(ErrorKind::IoError, "policy checkpoint lacks '" + key + "'");
  return it->second;
}

}  // namespace

PolicyNetwork::PolicyNetwork(const NetworkShape& shape, std::uint64_t seed)
    : shape_(shape), lstm_("lstm", idx(shape.input), idx(shape.lstm_hidden)) {
  if (shape.fc.empty()) fail(ErrorKind::ConfigError, "policy trunk needs at least one FC layer");
  std::size_t prev = shape.lstm_hidden;
  for (std::size_t l = 0; l < shape.fc.size(); ++l) {
    trunk_.emplace_back("fc." + std::to_string(l), idx(prev), idx(shape.fc[l]), nn::Activation::ReLU);
    prev = shape.fc[l];
  }
  policy_head_ = nn::Dense("policy_head", idx(prev), idx(shape.actions), nn::Activation::Identity);
  aux_head_ = nn::Dense("aux_head", idx(prev), idx(shape.aux_classes), nn::Activation::Identity);
  value_head_ = nn::Dense("value_head", idx(prev), 1, nn::Activation::Identity);

  std::mt19937_64 rng(seed);
  lstm_.init_uniform(rng);
  for (auto& layer : trunk_) layer.init_uniform(rng);
  policy_head_.init_uniform(rng);
  aux_head_.init_uniform(rng);
  value_head_.init_uniform(rng);
}

Matrix PolicyNetwork::trunk_infer(const Matrix& lstm_out) const {
  Matrix h = lstm_out;
  for (const auto& layer : trunk_) h = layer.infer(h);
  return h;
}

PolicyNetwork::StepOutput PolicyNetwork::step(const Vector& observation, const LstmState& state) const {
  StepOutput out;
  out.next_state = lstm_.step(observation, state);
  const Matrix features = trunk_infer(out.next_state.h);
  out.policy_log_probs = nn::log_softmax(policy_head_.infer(features)).col(0);
  out.aux_log_probs = nn::log_softmax(aux_head_.infer(features)).col(0);
  out.value = value_head_.infer(features)(0, 0);
  return out;
}

PolicyNetwork::SequenceOutput PolicyNetwork::forward(const Matrix& observations, const LstmState& initial,
                                                     std::span<const std::uint8_t> reset_before) {
  Matrix h = lstm_.forward(observations, initial, reset_before);
  for (auto& layer : trunk_) h = layer.forward(h);
  SequenceOutput out;
  out.policy_logits = policy_head_.forward(h);
  out.aux_logits = aux_head_.forward(h);
  out.values = value_head_.forward(h).row(0).transpose();
  return out;
}

void PolicyNetwork::backward(const Matrix& grad_policy_logits, const Matrix* grad_aux_logits,
                             const Vector& grad_values) {
  Matrix g = policy_head_.backward(grad_policy_logits);
  g += value_head_.backward(grad_values.transpose());
  if (grad_aux_logits) g += aux_head_.backward(*grad_aux_logits);
  for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = it->backward(g);
  lstm_.backward(g);
}

nn::ParameterList PolicyNetwork::parameters() {
  nn::ParameterList out = lstm_.parameters();
  for (auto& layer : trunk_)
    for (auto* p : layer.parameters()) out.push_back(p);
  for (auto* layer : {&policy_head_, &aux_head_, &value_head_})
    for (auto* p : layer->parameters()) out.push_back(p);
  return out;
}

nn::Checkpoint PolicyNetwork::to_checkpoint(const nn::Adam* optimizer, std::map<std::string, std::string> metadata) {
  metadata["kind"] = "policy";
  metadata["input"] = std::to_string(shape_.input);
  metadata["lstm_hidden"] = std::to_string(shape_.lstm_hidden);
  metadata["fc"] = join(shape_.fc);
  metadata["actions"] = std::to_string(shape_.actions);
  metadata["aux_classes"] = std::to_string(shape_.aux_classes);
  return nn::capture(parameters(), optimizer, std::move(metadata));
}

PolicyNetwork PolicyNetwork::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (meta(ckpt, "kind") != "policy") fail(ErrorKind::IoError, "checkpoint is not a policy network");
  NetworkShape shape;
  shape.input = std::stoul(meta(ckpt, "input"));
  shape.lstm_hidden = std::stoul(meta(ckpt, "lstm_hidden"));
  shape.fc.clear();
  std::stringstream ss(meta(ckpt, "fc"));
  std::string item;
  while (std::getline(ss, item, ',')) shape.fc.push_back(std::stoul(item));
  shape.actions = std::stoul(meta(ckpt, "actions"));
  shape.aux_classes = std::stoul(meta(ckpt, "aux_classes"));
  PolicyNetwork net(shape, 0);
  nn::restore_parameters(ckpt, net.parameters());
  return net;
}

std::size_t sample_categorical(const Vector& probs, double u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<std::size_t>(i);
  }
  // Rounding left the total just under u; take the last non-zero entry.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
    if (probs(i) > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

std::size_t argmax_lowest(const Vector& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(idx(best))) best = static_cast<std::size_t>(i);
  return best;
}

ActResult act(const PolicyNetwork& net, std::span<const double> observation, const LstmState& state, ActMode mode,
              std::mt19937_64* rng) {
  if (observation.size() != net.shape().input) {
    fail(ErrorKind::ShapeMismatch, "observation has " + std::to_string(observation.size()) + " values, network expects " +
                                       std::to_string(net.shape().input));
  }
  const Vector obs = Eigen::Map<const Vector>(observation.data(), idx(observation.size()));
  auto out = net.step(obs, state);
  ActResult r;
  r.policy_probs = out.policy_log_probs.array().exp().matrix();
  r.aux_probs = out.aux_log_probs.array().exp().matrix();
  if (mode == ActMode::Greedy) {
    r.action = argmax_lowest(out.policy_log_probs);
  } else {
    if (!rng) fail(ErrorKind::ConfigError, "sampling requires a random generator");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    r.action = sample_categorical(r.policy_probs, unit(*rng));
  }
  r.log_prob = out.policy_log_probs(idx(r.action));
  r.value = out.value;
  r.next_state = std::move(out.next_state);
  if (!std::isfinite(r.log_prob) || !std::isfinite(r.value)) fail(ErrorKind::NonFiniteValue, "policy output");
  return r;
}

}  // namespace axtrade::ppo
