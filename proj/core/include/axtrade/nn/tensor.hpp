#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace axtrade::nn {

// Column-major 64-bit tensors. Layers take (features x batch) matrices; a
// sequence is (features x time).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A learnable block with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

using ParameterList = std::vector<Parameter*>;

// Throws NonFiniteValue naming `where` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view where);

void zero_grads(const ParameterList& params);

// Global L2 norm over all parameter gradients.
double grad_norm(const ParameterList& params);

// Rescales gradients so the global norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(const ParameterList& params, double max_norm);

// Column-wise numerically stable softmax / log-softmax.
Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

std::size_t parameter_count(const ParameterList& params);

}  // namespace axtrade::nn
