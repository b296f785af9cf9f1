#include "stablegrasp/policy/modules.hpp"

#include <stdexcept>

namespace sg::policy {

LinearLayer::LinearLayer(nn::ParameterSet& ps, const std::string& prefix, int in, int out,
                         nn::Rng& rng) {
  w = &ps.add(prefix + ".w", nn::init_uniform_fan_in({in, out}, in, rng));
  b = &ps.add(prefix + ".b", nn::init_uniform_fan_in({out}, in, rng));
}

Conv2dLayer::Conv2dLayer(nn::ParameterSet& ps, const std::string& prefix, int c_in, int c_out,
                         int ksize, int stride_, int pad_, nn::Rng& rng)
    : stride(stride_), pad(pad_) {
  int fan_in = c_in * ksize * ksize;
  k = &ps.add(prefix + ".k", nn::init_uniform_fan_in({c_out, c_in, ksize, ksize}, fan_in, rng));
  b = &ps.add(prefix + ".b", nn::init_uniform_fan_in({c_out}, fan_in, rng));
}

LayerNormLayer::LayerNormLayer(nn::ParameterSet& ps, const std::string& prefix, int dim) {
  g = &ps.add(prefix + ".g", nn::Tensor::full({dim}, 1.0f));
  b = &ps.add(prefix + ".b", nn::Tensor::zeros({dim}));
}

BatchNorm2dLayer::BatchNorm2dLayer(nn::ParameterSet& ps, const std::string& prefix, int channels) {
  g = &ps.add(prefix + ".g", nn::Tensor::full({channels}, 1.0f));
  b = &ps.add(prefix + ".b", nn::Tensor::zeros({channels}));
  running_mean = &ps.add(prefix + ".running_mean", nn::Tensor::zeros({channels}), false);
  running_var = &ps.add(prefix + ".running_var", nn::Tensor::full({channels}, 1.0f), false);
}

MultiHeadAttention::MultiHeadAttention(nn::ParameterSet& ps, const std::string& prefix, int dim,
                                       int heads_, nn::Rng& rng)
    : heads(heads_) {
  if (dim % heads_ != 0)
    throw std::invalid_argument("MultiHeadAttention: dim " + std::to_string(dim) +
                                " not divisible by " + std::to_string(heads_) + " heads");
  wq = LinearLayer(ps, prefix + ".wq", dim, dim, rng);
  wk = LinearLayer(ps, prefix + ".wk", dim, dim, rng);
  wv = LinearLayer(ps, prefix + ".wv", dim, dim, rng);
  wo = LinearLayer(ps, prefix + ".wo", dim, dim, rng);
}

nn::ValueId MultiHeadAttention::forward(nn::Tape& t, nn::ValueId query, nn::ValueId context,
                                        int batch, int nq, int nk) const {
  nn::ValueId q = wq.forward(t, query);
  nn::ValueId k = wk.forward(t, context);
  nn::ValueId v = wv.forward(t, context);
  nn::ValueId att = t.attention(q, k, v, heads, batch, nq, nk);
  return wo.forward(t, att);
}

Mlp::Mlp(nn::ParameterSet& ps, const std::string& prefix, const std::vector<int>& dims,
         nn::Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (size_t i = 0; i + 1 < dims.size(); ++i)
    layers.emplace_back(ps, prefix + ".fc" + std::to_string(i), dims[i], dims[i + 1], rng);
}

nn::ValueId Mlp::forward(nn::Tape& t, nn::ValueId x) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(t, x);
    if (i + 1 < layers.size()) x = t.relu(x);
  }
  return x;
}

}  // namespace sg::policy
