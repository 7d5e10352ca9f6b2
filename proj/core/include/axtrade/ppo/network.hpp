#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "axtrade/nn/checkpoint.hpp"
#include "axtrade/nn/dense.hpp"
#include "axtrade/nn/lstm.hpp"

namespace axtrade::ppo {

using nn::LstmState;
using nn::Matrix;
using nn::Vector;

struct NetworkShape {
  std::size_t input = 80;
  std::size_t lstm_hidden = 128;
  std::vector<std::size_t> fc = {32, 64, 64};
  std::size_t actions = 3;
  std::size_t aux_classes = 12;
};

// Recurrent actor-critic: LSTM -> ReLU FC trunk, then three linear heads on the
// trunk output: trade-policy logits, cluster-label logits and the state value.
class PolicyNetwork {
 public:
  PolicyNetwork(const NetworkShape& shape, std::uint64_t seed);

  struct StepOutput {
    Vector policy_log_probs;
    Vector aux_log_probs;
    double value = 0.0;
    LstmState next_state;
  };

  // Single observation, no recording.
  StepOutput step(const Vector& observation, const LstmState& state) const;
  LstmState initial_state() const { return LstmState::zeros(static_cast<Eigen::Index>(shape_.lstm_hidden)); }

  struct SequenceOutput {
    Matrix policy_logits;  // (actions x T)
    Matrix aux_logits;     // (aux_classes x T)
    Vector values;         // T
  };

  // Records a T-step sequence for backward(). Columns evaluate bit-identically to step().
  SequenceOutput forward(const Matrix& observations, const LstmState& initial,
                         std::span<const std::uint8_t> reset_before = {});

  // Accumulates parameter gradients from logits/value gradients of the last forward().
  // A null aux gradient leaves the aux head untouched.
  void backward(const Matrix& grad_policy_logits, const Matrix* grad_aux_logits, const Vector& grad_values);

  nn::ParameterList parameters();
  nn::ParameterList aux_head_parameters() { return aux_head_.parameters(); }
  const NetworkShape& shape() const noexcept { return shape_; }

  nn::Checkpoint to_checkpoint(const nn::Adam* optimizer, std::map<std::string, std::string> metadata);
  static PolicyNetwork from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  Matrix trunk_infer(const Matrix& lstm_out) const;

  NetworkShape shape_;
  nn::LSTM lstm_;
  std::vector<nn::Dense> trunk_;
  nn::Dense policy_head_;
  nn::Dense aux_head_;
  nn::Dense value_head_;
};

enum class ActMode { Sample, Greedy };

struct ActResult {
  std::size_t action = 0;  // index into the policy head
  double log_prob = 0.0;
  double value = 0.0;
  Vector policy_probs;
  Vector aux_probs;
  LstmState next_state;
};

// Sample draws from the policy softmax with `rng`; Greedy is argmax, lowest index on ties.
ActResult act(const PolicyNetwork& net, std::span<const double> observation, const LstmState& state, ActMode mode,
              std::mt19937_64* rng = nullptr);

// Inverse-CDF draw; lowest index whose cumulative probability exceeds u in [0, 1).
std::size_t sample_categorical(const Vector& probs, double u);
std::size_t argmax_lowest(const Vector& v);

}  // namespace axtrade::ppo
