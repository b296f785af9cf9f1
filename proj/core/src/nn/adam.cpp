#include "stablegrasp/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace sg::nn {

Adam::Adam(ParameterSet& params, float lr, float beta1, float beta2, float eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step() {
  // lazy sizing so parameters may be added between construction and the
  // first step
  for (size_t i = first_moment_.size(); i < params_.size(); ++i) {
    size_t n = params_[i].value.data.size();
    first_moment_.emplace_back(n, 0.0f);
    second_moment_.emplace_back(n, 0.0f);
  }
  ++step_count_;
  float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(step_count_));
  float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(step_count_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (!p.trainable) continue;
    auto& m = first_moment_[i];
    auto& v = second_moment_[i];
    for (size_t j = 0; j < m.size(); ++j) {
      float g = p.grad.data[j];
      if (!std::isfinite(g))
        throw std::runtime_error("Adam: non-finite gradient in parameter '" + p.name + "'");
      m[j] = beta1_ * m[j] + (1.0f - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0f - beta2_) * g * g;
      float mhat = m[j] / bc1;
      float vhat = v[j] / bc2;
      p.value.data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace sg::nn
