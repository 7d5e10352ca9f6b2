#pragma once

#include <optional>
#include <random>
#include <string>

#include "axtrade/nn/tensor.hpp"

namespace axtrade::nn {

enum class Activation { ReLU, Tanh, Identity, Softmax };

// Fully connected layer y = act(W x + b) with W of shape (out x in).
// forward() records its input and output; the next backward() consumes them.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, Eigen::Index in_size, Eigen::Index out_size, Activation activation);

  // Uniform in +-1/sqrt(in_size) for weights and biases.
  void init_uniform(std::mt19937_64& rng);

  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;

  // Accumulates dL/dW and dL/db; returns dL/dx.
  Matrix backward(const Matrix& grad_out);

  bool has_recorded_forward() const noexcept { return input_.has_value(); }

  ParameterList parameters() { return {&weight_, &bias_}; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }
  const Parameter& weight() const noexcept { return weight_; }
  const Parameter& bias() const noexcept { return bias_; }

  Eigen::Index in_size() const noexcept { return weight_.value.cols(); }
  Eigen::Index out_size() const noexcept { return weight_.value.rows(); }
  Activation activation() const noexcept { return activation_; }
  const std::string& name() const noexcept { return name_; }

 private:
  Matrix affine(const Matrix& x) const;
  Matrix activate(Matrix z) const;

  std::string name_;
  Activation activation_ = Activation::Identity;
  Parameter weight_;
  Parameter bias_;
  std::optional<Matrix> input_;
  std::optional<Matrix> output_;
};

}  // namespace axtrade::nn
