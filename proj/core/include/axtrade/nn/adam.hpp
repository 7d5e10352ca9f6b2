#pragma once

#include <cstdint>
#include <vector>

#include "axtrade/nn/tensor.hpp"

namespace axtrade::nn {

struct AdamConfig {
  double learning_rate = 0.0000879678;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are created on the first step and
// must keep matching the parameter list they were created for.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const ParameterList& params);

  std::uint64_t step_count() const noexcept { return step_count_; }
  const AdamConfig& config() const noexcept { return config_; }
  void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }

  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }

  void restore(std::uint64_t step_count, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  AdamConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace axtrade::nn
