#include "axtrade/nn/dense.hpp"

#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::nn {

Dense::Dense(std::string name, Eigen::Index in_size, Eigen::Index out_size, Activation activation)
    : name_(std::move(name)),
      activation_(activation),
      weight_(name_ + ".weight", out_size, in_size),
      bias_(name_ + ".bias", out_size, 1) {}

void Dense::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_size()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < weight_.value.cols(); ++j)
    for (Eigen::Index i = 0; i < weight_.value.rows(); ++i) weight_.value(i, j) = dist(rng);
  for (Eigen::Index i = 0; i < bias_.value.rows(); ++i) bias_.value(i, 0) = dist(rng);
}

// Column by column so a batch evaluates bit-identically to single-column calls.
Matrix Dense::affine(const Matrix& x) const {
  if (x.rows() != in_size()) {
    fail(ErrorKind::ShapeMismatch, name_ + ": input has " + std::to_string(x.rows()) + " rows, expected " +
                                       std::to_string(in_size()));
  }
  Matrix z(out_size(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    z.col(j).noalias() = weight_.value * x.col(j);
    z.col(j) += bias_.value.col(0);
  }
  return z;
}

Matrix Dense::activate(Matrix z) const {
  switch (activation_) {
    case Activation::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Softmax:
      z = softmax(z);
      break;
    case Activation::Identity:
      break;
  }
  require_finite(z, name_);
  return z;
}

Matrix Dense::forward(const Matrix& x) {
  Matrix y = activate(affine(x));
  input_ = x;
  output_ = y;
  return y;
}

Matrix Dense::infer(const Matrix& x) const { return activate(affine(x)); }

Matrix Dense::backward(const Matrix& grad_out) {
  if (!input_ || !output_) fail(ErrorKind::NoRecordedForward, name_);
  const Matrix& y = *output_;
  if (grad_out.rows() != y.rows() || grad_out.cols() != y.cols()) {
    fail(ErrorKind::ShapeMismatch, name_ + ": gradient shape does not match output");
  }
  Matrix gz;
  switch (activation_) {
    case Activation::ReLU:
      gz = (y.array() > 0.0).select(grad_out, 0.0);
      break;
    case Activation::Tanh:
      gz = (grad_out.array() * (1.0 - y.array().square())).matrix();
      break;
    case Activation::Softmax: {
      gz.resize(y.rows(), y.cols());
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double dot = grad_out.col(j).dot(y.col(j));
        gz.col(j) = (y.col(j).array() * (grad_out.col(j).array() - dot)).matrix();
      }
      break;
    }
    case Activation::Identity:
      gz = grad_out;
      break;
  }
  weight_.grad.noalias() += gz * input_->transpose();
  bias_.grad += gz.rowwise().sum();
  Matrix dx = weight_.value.transpose() * gz;
  require_finite(dx, name_ + " backward");
  input_.reset();
  output_.reset();
  return dx;
}

}  // namespace axtrade::nn
