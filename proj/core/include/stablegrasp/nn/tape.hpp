#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stablegrasp/nn/params.hpp"
#include "stablegrasp/nn/tensor.hpp"

namespace sg::nn {

using ValueId = int;

/// Reverse-mode autodiff tape, rebuilt per forward pass (define-by-run).
/// Ops compute their value eagerly and record a backward closure. A tape
/// must be used from a single thread.
class Tape {
 public:
  /// Constant leaf; gradients do not propagate into it.
  ValueId constant(Tensor t);
  /// Parameter leaf; backward() accumulates into p.grad.
  ValueId param(Parameter& p);

  // --- linear algebra ---
  ValueId linear(ValueId x, ValueId w, ValueId b);
  ValueId matmul(ValueId a, ValueId b);
  ValueId transpose(ValueId a);

  // --- convolution / normalization ---
  ValueId conv2d(ValueId x, ValueId kernel, ValueId bias, int stride, int padding);
  ValueId batchnorm2d(ValueId x, ValueId gamma, ValueId beta, Parameter& running_mean,
                      Parameter& running_var, bool training, float momentum = 0.1f,
                      float eps = 1e-5f);
  ValueId layernorm(ValueId x, ValueId gamma, ValueId beta, float eps = 1e-5f);

  /// Fused scaled-dot-product attention over `batch` independent
  /// sequences. q is [batch*nq, d], k and v are [batch*nk, d]; d must be
  /// divisible by num_heads. Returns [batch*nq, d].
  ValueId attention(ValueId q, ValueId k, ValueId v, int num_heads, int batch, int nq, int nk);

  // --- elementwise ---
  ValueId relu(ValueId x);
  ValueId tanh_(ValueId x);
  ValueId softplus(ValueId x);
  ValueId exp_(ValueId x);
  ValueId log_(ValueId x);
  ValueId square(ValueId x);
  ValueId clamp(ValueId x, float lo, float hi);
  ValueId scale(ValueId x, float s);
  ValueId add_scalar(ValueId x, float c);
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId min_(ValueId a, ValueId b);
  /// Broadcast a [1, c] row over every row of x.
  ValueId add_row(ValueId x, ValueId row);
  ValueId mul_row(ValueId x, ValueId row);

  // --- shape / gather ---
  ValueId softmax_rows(ValueId x);
  ValueId concat_cols(ValueId a, ValueId b);
  ValueId concat_rows(ValueId a, ValueId b);
  ValueId slice_cols(ValueId x, int c0, int c1);
  ValueId gather_rows(ValueId x, std::vector<int> indices);
  ValueId reshape(ValueId x, std::vector<int> shape);
  /// Mean over the trailing spatial dims of [n, c, h, w] -> [n, c].
  ValueId spatial_mean(ValueId x);

  // --- reductions / densities ---
  ValueId sum_cols(ValueId x);   // [n, c] -> [n, 1]
  ValueId mean_all(ValueId x);   // -> [1]
  ValueId sum_all(ValueId x);    // -> [1]
  /// Row-wise diagonal-Gaussian log density of `sample` -> [n, 1].
  ValueId gaussian_log_prob(ValueId mean, ValueId log_std, ValueId sample);

  ValueId mse(ValueId pred, ValueId target) { return mean_all(square(sub(pred, target))); }

  const Tensor& value(ValueId id) const { return nodes_[static_cast<size_t>(id)]->value; }
  const Tensor& grad(ValueId id) const { return nodes_[static_cast<size_t>(id)]->grad; }

  /// Backpropagates from a scalar loss. Internal gradients are zeroed
  /// first, so repeated calls accumulate additively into parameter
  /// gradients only.
  void backward(ValueId loss);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;
    Parameter* parameter = nullptr;
    bool needs_grad = false;
  };

  ValueId push(Tensor value, bool needs_grad, std::function<void(Tape&)> back);
  Node& node(ValueId id) { return *nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_mut(ValueId id) { return node(id).grad; }
  bool ng(ValueId id) { return node(id).needs_grad; }

  std::vector<std::unique_ptr<Node>> nodes_;
  ValueId self_ = -1;  // node whose backward closure is currently running
};
}  // namespace sg::nn
