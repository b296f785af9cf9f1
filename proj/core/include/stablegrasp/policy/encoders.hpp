#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stablegrasp/env/env.hpp"
#include "stablegrasp/policy/modules.hpp"

namespace sg::policy {

struct TransformerConfig {
  int token_dim = 32;
  int mlp_dim = 128;
  int depth = 8;
  int num_heads = 4;
  int tok_channels = 16;  // first tokenizer conv width (second equals token_dim)
  bool readout_only_attention = false;
  float input_scale = 50.0f;
  float readout_init_std = 0.02f;
};

struct CnnConfig {
  int c1 = 32, c2 = 64, c3 = 64;
  int fc1 = 128, fc2 = 128;
  float input_scale = 50.0f;
};

/// Observation encoder interface: [batch, T*S*F*H*W] floats in, one
/// embedding row per sample out.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual nn::ValueId forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                              bool training) const = 0;
  virtual int embed_dim() const = 0;
};

/// ViT-style encoder: shared CNN projection tokenizes each tactile map,
/// sine-cosine positional encoding by timestamp, a learnable readout
/// token prepended, then pre-norm attention blocks. The readout row's
/// final embedding is the output.
class TransformerEncoder : public Encoder {
 public:
  TransformerEncoder(nn::ParameterSet& ps, const std::string& prefix, const TransformerConfig& cfg,
                     nn::Rng& rng);

  nn::ValueId forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                      bool training) const override;
  int embed_dim() const override { return cfg_.token_dim; }

  /// Shared-weight projection of the T tactile maps to tokens, before
  /// positional encoding. Returns [batch*T, token_dim].
  nn::ValueId tokenize(nn::Tape& t, const nn::Tensor& obs_batch, int batch) const;

  /// Standard sine-cosine absolute positional encoding table.
  static nn::Tensor positional_encoding(int n_pos, int dim);

  const nn::Parameter& readout_token() const { return *readout_; }

 private:
  TransformerConfig cfg_;
  Conv2dLayer conv1_, conv2_;
  nn::Parameter* readout_ = nullptr;
  struct Block {
    LayerNormLayer ln1;
    MultiHeadAttention attn;
    LayerNormLayer ln2;
    LinearLayer fc1, fc2;
  };
  std::vector<Block> blocks_;
};

/// Baseline: temporal maps stacked channel-wise, 3x Conv-BatchNorm-ReLU,
/// flatten, 2x FC-ReLU.
class CnnEncoder : public Encoder {
 public:
  CnnEncoder(nn::ParameterSet& ps, const std::string& prefix, const CnnConfig& cfg, nn::Rng& rng);

  nn::ValueId forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                      bool training) const override;
  int embed_dim() const override { return cfg_.fc2; }

 private:
  CnnConfig cfg_;
  Conv2dLayer conv1_, conv2_, conv3_;
  BatchNorm2dLayer bn1_, bn2_, bn3_;
  LinearLayer l1_, l2_;
};

}  // namespace sg::policy
