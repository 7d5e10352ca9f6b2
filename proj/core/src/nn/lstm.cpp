#include "axtrade/nn/lstm.hpp"

#include <cmath>

#include "axtrade/error.hpp"

namespace axtrade::nn {
namespace {

Vector sigmoid(const Vector& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

LSTM::LSTM(std::string name, Eigen::Index input_size, Eigen::Index hidden_size)
    : name_(std::move(name)),
      input_weight_(name_ + ".input_weight", 4 * hidden_size, input_size),
      recurrent_weight_(name_ + ".recurrent_weight", 4 * hidden_size, hidden_size),
      bias_(name_ + ".bias", 4 * hidden_size, 1) {}

void LSTM::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_size() + hidden_size()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Parameter* p : parameters()) {
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = dist(rng);
  }
}

void LSTM::gates(const Vector& x, const Vector& h, Vector& i, Vector& f, Vector& g, Vector& o) const {
  if (x.size() != input_size() || h.size() != hidden_size()) {
    fail(ErrorKind::ShapeMismatch, name_ + ": input or state size mismatch");
  }
  const Eigen::Index H = hidden_size();
  Vector z = input_weight_.value * x;
  z.noalias() += recurrent_weight_.value * h;
  z += bias_.value.col(0);
  i = sigmoid(z.segment(0, H));
  f = sigmoid(z.segment(H, H));
  g = z.segment(2 * H, H).array().tanh().matrix();
  o = sigmoid(z.segment(3 * H, H));
}

LstmState LSTM::step(const Vector& x, const LstmState& state) const {
  if (state.c.size() != hidden_size()) fail(ErrorKind::ShapeMismatch, name_ + ": cell state size");
  Vector i, f, g, o;
  gates(x, state.h, i, f, g, o);
  LstmState next;
  next.c = (f.array() * state.c.array() + i.array() * g.array()).matrix();
  next.h = (o.array() * next.c.array().tanh()).matrix();
  if (!next.h.allFinite() || !next.c.allFinite()) fail(ErrorKind::NonFiniteValue, name_);
  return next;
}

Matrix LSTM::forward(const Matrix& inputs, const LstmState& initial, std::span<const std::uint8_t> reset_before) {
  if (!reset_before.empty() && static_cast<Eigen::Index>(reset_before.size()) != inputs.cols()) {
    fail(ErrorKind::ShapeMismatch, name_ + ": reset mask length");
  }
  if (initial.h.size() != hidden_size() || initial.c.size() != hidden_size()) {
    fail(ErrorKind::ShapeMismatch, name_ + ": initial state size");
  }
  const Eigen::Index T = inputs.cols();
  cache_.clear();
  cache_.reserve(static_cast<std::size_t>(T));
  Matrix outputs(hidden_size(), T);
  LstmState state = initial;
  for (Eigen::Index t = 0; t < T; ++t) {
    StepCache sc;
    sc.reset = !reset_before.empty() && reset_before[static_cast<std::size_t>(t)] != 0;
    if (sc.reset) state = LstmState::zeros(hidden_size());
    sc.x = inputs.col(t);
    sc.h_prev = state.h;
    sc.c_prev = state.c;
    gates(sc.x, sc.h_prev, sc.i, sc.f, sc.g, sc.o);
    sc.c = (sc.f.array() * sc.c_prev.array() + sc.i.array() * sc.g.array()).matrix();
    sc.tanh_c = sc.c.array().tanh().matrix();
    state.c = sc.c;
    state.h = (sc.o.array() * sc.tanh_c.array()).matrix();
    outputs.col(t) = state.h;
    cache_.push_back(std::move(sc));
  }
  require_finite(outputs, name_);
  return outputs;
}

LstmState LSTM::final_state() const {
  if (cache_.empty()) fail(ErrorKind::NoRecordedForward, name_);
  const auto& last = cache_.back();
  return {(last.o.array() * last.tanh_c.array()).matrix(), last.c};
}

LSTM::Gradients LSTM::backward(const Matrix& grad_outputs, const Vector* grad_final_h, const Vector* grad_final_c) {
  if (cache_.empty()) fail(ErrorKind::NoRecordedForward, name_);
  const Eigen::Index T = static_cast<Eigen::Index>(cache_.size());
  const Eigen::Index H = hidden_size();
  if (grad_outputs.rows() != H || grad_outputs.cols() != T) {
    fail(ErrorKind::ShapeMismatch, name_ + ": output gradient shape");
  }
  Gradients out;
  out.inputs.resize(input_size(), T);
  Vector dh_next = grad_final_h ? *grad_final_h : Vector::Zero(H);
  Vector dc_next = grad_final_c ? *grad_final_c : Vector::Zero(H);
  Vector dz(4 * H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const StepCache& sc = cache_[static_cast<std::size_t>(t)];
    const Vector dh = grad_outputs.col(t) + dh_next;
    const Vector d_o = (dh.array() * sc.tanh_c.array()).matrix();
    const Vector dc =
        (dc_next.array() + dh.array() * sc.o.array() * (1.0 - sc.tanh_c.array().square())).matrix();
    dz.segment(0, H) = (dc.array() * sc.g.array() * sc.i.array() * (1.0 - sc.i.array())).matrix();
    dz.segment(H, H) = (dc.array() * sc.c_prev.array() * sc.f.array() * (1.0 - sc.f.array())).matrix();
    dz.segment(2 * H, H) = (dc.array() * sc.i.array() * (1.0 - sc.g.array().square())).matrix();
    dz.segment(3 * H, H) = (d_o.array() * sc.o.array() * (1.0 - sc.o.array())).matrix();

    input_weight_.grad.noalias() += dz * sc.x.transpose();
    recurrent_weight_.grad.noalias() += dz * sc.h_prev.transpose();
    bias_.grad.col(0) += dz;
    out.inputs.col(t).noalias() = input_weight_.value.transpose() * dz;

    Vector dh_prev = recurrent_weight_.value.transpose() * dz;
    Vector dc_prev = (dc.array() * sc.f.array()).matrix();
    if (sc.reset) {
      dh_prev.setZero();
      dc_prev.setZero();
    }
    dh_next = std::move(dh_prev);
    dc_next = std::move(dc_prev);
  }
  out.h0 = std::move(dh_next);
  out.c0 = std::move(dc_next);
  require_finite(out.inputs, name_ + " backward");
  cache_.clear();
  return out;
}

}  // namespace axtrade::nn
