#pragma once

#include <cstdint>
#include <vector>

#include "stablegrasp/nn/params.hpp"

namespace sg::nn {

/// Bias-corrected Adam over the trainable parameters of one ParameterSet.
/// Moment buffers are keyed by parameter index and sized on first step.
class Adam {
 public:
  explicit Adam(ParameterSet& params, float lr = 3e-4f, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-8f);

  /// One update from the currently accumulated gradients. Throws a
  /// training error naming the parameter if any gradient is non-finite.
  void step();

  int64_t step_count() const { return step_count_; }
  float learning_rate() const { return lr_; }
  void set_learning_rate(float lr) { lr_ = lr; }

 private:
  ParameterSet& params_;
  float lr_, beta1_, beta2_, eps_;
  int64_t step_count_ = 0;
  std::vector<std::vector<float>> first_moment_, second_moment_;
};

}  // namespace sg::nn
