#include "axtrade/nn/tensor.hpp"

#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::nn {

void require_finite(const Matrix& m, std::string_view where) {
  if (!m.allFinite()) fail(ErrorKind::NonFiniteValue, "non-finite value in " + std::string(where));
}

void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

double grad_norm(const ParameterList& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (!std::isfinite(norm)) fail(ErrorKind::NonFiniteValue, "gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - mx).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    out.col(j) = (logits.col(j).array() - lse).matrix();
  }
  return out;
}

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace axtrade::nn
