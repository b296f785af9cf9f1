#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stablegrasp/nn/rng.hpp"
#include "stablegrasp/nn/tensor.hpp"

namespace sg::nn {

/// Named learnable (or buffer) tensor with a gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter(std::string n, Tensor v, bool train)
      : name(std::move(n)), value(std::move(v)), grad(value.shape), trainable(train) {}
};

/// Ordered collection of uniquely named parameters for one network.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor init, bool trainable = true);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  void zero_grad() {
    for (auto& p : params_)
      for (auto& g : p->grad.data) g = 0.0f;
  }

  size_t size() const { return params_.size(); }
  int total_count(bool trainable_only = false) const;
  Parameter& operator[](size_t i) { return *params_[i]; }
  const Parameter& operator[](size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, size_t> index_;
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor init_uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng);
Tensor init_normal(std::vector<int> shape, float std, Rng& rng);

}  // namespace sg::nn
