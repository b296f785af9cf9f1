#include <cmath>
#include <stdexcept>

#include "stablegrasp/policy/encoders.hpp"

namespace sg::policy {

namespace {
constexpr int kTokens = env::kObsT * env::kObsS;
}  // namespace

TransformerEncoder::TransformerEncoder(nn::ParameterSet& ps, const std::string& prefix,
                                       const TransformerConfig& cfg, nn::Rng& rng)
    : cfg_(cfg) {
  if (cfg.token_dim % 2 != 0)
    throw std::invalid_argument("TransformerEncoder: token_dim must be even");
  if (cfg.depth < 1) throw std::invalid_argument("TransformerEncoder: depth must be >= 1");
  conv1_ = Conv2dLayer(ps, prefix + ".tok.conv1", env::kObsF, cfg.tok_channels, 3, 1, 1, rng);
  // stride 2 halves the grid before pooling; the 8x6 maps carry no
  // detail that survives global averaging anyway
  conv2_ = Conv2dLayer(ps, prefix + ".tok.conv2", cfg.tok_channels, cfg.token_dim, 3, 2, 1, rng);
  readout_ = &ps.add(prefix + ".readout",
                     nn::init_normal({1, cfg.token_dim}, cfg.readout_init_std, rng));
  for (int i = 0; i < cfg.depth; ++i) {
    std::string bp = prefix + ".block" + std::to_string(i);
    Block b;
    b.ln1 = LayerNormLayer(ps, bp + ".ln1", cfg.token_dim);
    b.attn = MultiHeadAttention(ps, bp + ".attn", cfg.token_dim, cfg.num_heads, rng);
    b.ln2 = LayerNormLayer(ps, bp + ".ln2", cfg.token_dim);
    b.fc1 = LinearLayer(ps, bp + ".mlp.fc1", cfg.token_dim, cfg.mlp_dim, rng);
    b.fc2 = LinearLayer(ps, bp + ".mlp.fc2", cfg.mlp_dim, cfg.token_dim, rng);
    blocks_.push_back(b);
  }
}

nn::Tensor TransformerEncoder::positional_encoding(int n_pos, int dim) {
  nn::Tensor pe({n_pos, dim});
  for (int p = 0; p < n_pos; ++p)
    for (int i = 0; i < dim / 2; ++i) {
      double freq = std::pow(10000.0, -2.0 * i / dim);
      pe.data[static_cast<size_t>(p * dim + 2 * i)] = static_cast<float>(std::sin(p * freq));
      pe.data[static_cast<size_t>(p * dim + 2 * i + 1)] = static_cast<float>(std::cos(p * freq));
    }
  return pe;
}

nn::ValueId TransformerEncoder::tokenize(nn::Tape& t, const nn::Tensor& obs_batch,
                                         int batch) const {
  if (obs_batch.numel() != batch * env::kObsSize)
    throw std::invalid_argument("tokenize: observation batch has " +
                                std::to_string(obs_batch.numel()) + " values, expected " +
                                std::to_string(batch * env::kObsSize));
  nn::Tensor maps({batch * kTokens, env::kObsF, env::kObsH, env::kObsW});
  for (int i = 0; i < maps.numel(); ++i)
    maps.data[static_cast<size_t>(i)] = obs_batch.data[static_cast<size_t>(i)] * cfg_.input_scale;
  nn::ValueId x = t.constant(std::move(maps));
  x = t.relu(conv1_.forward(t, x));
  x = t.relu(conv2_.forward(t, x));
  return t.spatial_mean(x);  // [batch*T, token_dim]
}

nn::ValueId TransformerEncoder::forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                                        bool /*training*/) const {
  int d = cfg_.token_dim;
  nn::ValueId tok = tokenize(t, obs_batch, batch);

  // positional encoding by timestamp, tiled over the batch
  nn::Tensor pe = positional_encoding(kTokens, d);
  nn::Tensor pe_tiled({batch * kTokens, d});
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < kTokens * d; ++i)
      pe_tiled.data[static_cast<size_t>(b * kTokens * d + i)] = pe.data[static_cast<size_t>(i)];
  tok = t.add(tok, t.constant(std::move(pe_tiled)));

  // prepend the readout token per sample
  int n = kTokens + 1;
  nn::ValueId ro = t.param(*readout_);
  nn::ValueId ro_tiled = t.gather_rows(ro, std::vector<int>(static_cast<size_t>(batch), 0));
  nn::ValueId stacked = t.concat_rows(ro_tiled, tok);  // [batch + batch*T, d]
  std::vector<int> order;
  order.reserve(static_cast<size_t>(batch) * n);
  for (int b = 0; b < batch; ++b) {
    order.push_back(b);
    for (int k = 0; k < kTokens; ++k) order.push_back(batch + b * kTokens + k);
  }
  nn::ValueId x = t.gather_rows(stacked, order);  // [batch*n, d]

  std::vector<int> readout_rows;
  readout_rows.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) readout_rows.push_back(b * n);

  for (const Block& blk : blocks_) {
    nn::ValueId h = blk.ln1.forward(t, x);
    if (cfg_.readout_only_attention) {
      nn::ValueId q = t.gather_rows(h, readout_rows);
      nn::ValueId att = blk.attn.forward(t, q, h, batch, 1, n);
      // scatter the readout update back; token rows get the zero row
      nn::ValueId zero = t.constant(nn::Tensor({1, d}));
      nn::ValueId padded = t.concat_rows(att, zero);
      std::vector<int> scatter(static_cast<size_t>(batch) * n, batch);
      for (int b = 0; b < batch; ++b) scatter[static_cast<size_t>(b) * n] = b;
      x = t.add(x, t.gather_rows(padded, scatter));
    } else {
      x = t.add(x, blk.attn.forward(t, h, h, batch, n, n));
    }
    nn::ValueId h2 = blk.ln2.forward(t, x);
    nn::ValueId m = blk.fc2.forward(t, t.relu(blk.fc1.forward(t, h2)));
    x = t.add(x, m);
  }
  return t.gather_rows(x, readout_rows);  // [batch, d]
}

}  // namespace sg::policy
