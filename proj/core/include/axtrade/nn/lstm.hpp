#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "axtrade/nn/tensor.hpp"

namespace axtrade::nn {

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(Eigen::Index hidden) { return {Vector::Zero(hidden), Vector::Zero(hidden)}; }
  friend bool operator==(const LstmState& a, const LstmState& b) {
    return a.h.size() == b.h.size() && a.c.size() == b.c.size() && a.h == b.h && a.c == b.c;
  }
};

// Single-layer LSTM. Gate pre-activations are stacked in the order
// input, forget, cell candidate, output:  z = W_x x + W_h h + b  (4H rows).
//   i = sigmoid(z_i)  f = sigmoid(z_f)  g = tanh(z_g)  o = sigmoid(z_o)
//   c' = f * c + i * g      h' = o * tanh(c')
class LSTM {
 public:
  LSTM() = default;
  LSTM(std::string name, Eigen::Index input_size, Eigen::Index hidden_size);

  // Uniform in +-1/sqrt(input_size + hidden_size).
  void init_uniform(std::mt19937_64& rng);

  LstmState step(const Vector& x, const LstmState& state) const;

  // Runs a (input x T) sequence from `initial`, recording every step. When
  // reset_before[t] is non-zero the state entering step t is zeroed first.
  // Returns hidden outputs (hidden x T).
  Matrix forward(const Matrix& inputs, const LstmState& initial, std::span<const std::uint8_t> reset_before = {});

  struct Gradients {
    Matrix inputs;  // dL/dx, (input x T)
    Vector h0;      // dL/d initial hidden
    Vector c0;      // dL/d initial cell
  };

  // grad_outputs is dL/dh_t for every step; optional gradients flow into the final state.
  Gradients backward(const Matrix& grad_outputs, const Vector* grad_final_h = nullptr,
                     const Vector* grad_final_c = nullptr);

  bool has_recorded_forward() const noexcept { return !cache_.empty(); }
  LstmState final_state() const;

  ParameterList parameters() { return {&input_weight_, &recurrent_weight_, &bias_}; }
  Parameter& input_weight() noexcept { return input_weight_; }
  Parameter& recurrent_weight() noexcept { return recurrent_weight_; }
  Parameter& bias() noexcept { return bias_; }

  Eigen::Index input_size() const noexcept { return input_weight_.value.cols(); }
  Eigen::Index hidden_size() const noexcept { return recurrent_weight_.value.cols(); }

 private:
  struct StepCache {
    Vector x, h_prev, c_prev, i, f, g, o, c, tanh_c;
    bool reset = false;
  };

  void gates(const Vector& x, const Vector& h, Vector& i, Vector& f, Vector& g, Vector& o) const;

  std::string name_;
  Parameter input_weight_;
  Parameter recurrent_weight_;
  Parameter bias_;
  std::vector<StepCache> cache_;
};

}  // namespace axtrade::nn
