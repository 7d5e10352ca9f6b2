#include "axtrade/nn/adam.hpp"

#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::nn {

void Adam::step(const ParameterList& params) {
  if (m_.empty() && step_count_ == 0) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) fail(ErrorKind::ShapeMismatch, "adam: parameter count changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto* p = params[k];
    if (p->grad.rows() != m_[k].rows() || p->grad.cols() != m_[k].cols() || p->value.rows() != m_[k].rows() ||
        p->value.cols() != m_[k].cols()) {
      fail(ErrorKind::ShapeMismatch, "adam: shape of " + p->name);
    }
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * p.grad;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= config_.learning_rate * (m_[k].array() / bc1) /
                       ((v_[k].array() / bc2).sqrt() + config_.epsilon);
  }
}

void Adam::restore(std::uint64_t step_count, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != v.size()) fail(ErrorKind::ShapeMismatch, "adam: moment lists differ in length");
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace axtrade::nn
