#pragma once

#include <string>
#include <vector>

#include "stablegrasp/nn/params.hpp"
#include "stablegrasp/nn/tape.hpp"

namespace sg::policy {

struct LinearLayer {
  nn::Parameter* w = nullptr;
  nn::Parameter* b = nullptr;
  LinearLayer() = default;
  LinearLayer(nn::ParameterSet& ps, const std::string& prefix, int in, int out, nn::Rng& rng);
  nn::ValueId forward(nn::Tape& t, nn::ValueId x) const {
    return t.linear(x, t.param(*w), t.param(*b));
  }
};

struct Conv2dLayer {
  nn::Parameter* k = nullptr;
  nn::Parameter* b = nullptr;
  int stride = 1, pad = 1;
  Conv2dLayer() = default;
  Conv2dLayer(nn::ParameterSet& ps, const std::string& prefix, int c_in, int c_out, int ksize,
              int stride, int pad, nn::Rng& rng);
  nn::ValueId forward(nn::Tape& t, nn::ValueId x) const {
    return t.conv2d(x, t.param(*k), t.param(*b), stride, pad);
  }
};

struct LayerNormLayer {
  nn::Parameter* g = nullptr;
  nn::Parameter* b = nullptr;
  LayerNormLayer() = default;
  LayerNormLayer(nn::ParameterSet& ps, const std::string& prefix, int dim);
  nn::ValueId forward(nn::Tape& t, nn::ValueId x) const {
    return t.layernorm(x, t.param(*g), t.param(*b));
  }
};

struct BatchNorm2dLayer {
  nn::Parameter* g = nullptr;
  nn::Parameter* b = nullptr;
  nn::Parameter* running_mean = nullptr;
  nn::Parameter* running_var = nullptr;
  BatchNorm2dLayer() = default;
  BatchNorm2dLayer(nn::ParameterSet& ps, const std::string& prefix, int channels);
  nn::ValueId forward(nn::Tape& t, nn::ValueId x, bool training) const {
    return t.batchnorm2d(x, t.param(*g), t.param(*b), *running_mean, *running_var, training);
  }
};

/// Multi-head attention: query/context projections, fused scaled-dot-
/// product core, output projection.
struct MultiHeadAttention {
  LinearLayer wq, wk, wv, wo;
  int heads = 1;
  MultiHeadAttention() = default;
  MultiHeadAttention(nn::ParameterSet& ps, const std::string& prefix, int dim, int heads,
                     nn::Rng& rng);
  nn::ValueId forward(nn::Tape& t, nn::ValueId query, nn::ValueId context, int batch, int nq,
                      int nk) const;
};

/// Stack of FC-ReLU layers with a final linear output.
struct Mlp {
  std::vector<LinearLayer> layers;
  Mlp() = default;
  Mlp(nn::ParameterSet& ps, const std::string& prefix, const std::vector<int>& dims, nn::Rng& rng);
  nn::ValueId forward(nn::Tape& t, nn::ValueId x) const;
};

}  // namespace sg::policy
