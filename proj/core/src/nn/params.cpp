#include "stablegrasp/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace sg::nn {

Parameter& ParameterSet::add(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name))
    throw std::invalid_argument("ParameterSet: duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(name, std::move(init), trainable));
  return *params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("ParameterSet: unknown parameter name '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("ParameterSet: unknown parameter name '" + name + "'");
  return *params_[it->second];
}

int ParameterSet::total_count(bool trainable_only) const {
  int n = 0;
  for (const auto& p : params_)
    if (!trainable_only || p->trainable) n += p->value.numel();
  return n;
}

Tensor init_uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

Tensor init_normal(std::vector<int> shape, float std, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = std * rng.normal_f();
  return t;
}

}  // namespace sg::nn
