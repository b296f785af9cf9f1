#include <stdexcept>

#include "stablegrasp/policy/encoders.hpp"

namespace sg::policy {

namespace {
constexpr int kChannels = env::kObsT * env::kObsF;  // temporal maps stacked channel-wise
constexpr int kFlat = env::kObsH * env::kObsW;
}  // namespace

CnnEncoder::CnnEncoder(nn::ParameterSet& ps, const std::string& prefix, const CnnConfig& cfg,
                       nn::Rng& rng)
    : cfg_(cfg) {
  conv1_ = Conv2dLayer(ps, prefix + ".conv1", kChannels, cfg.c1, 3, 1, 1, rng);
  bn1_ = BatchNorm2dLayer(ps, prefix + ".bn1", cfg.c1);
  conv2_ = Conv2dLayer(ps, prefix + ".conv2", cfg.c1, cfg.c2, 3, 1, 1, rng);
  bn2_ = BatchNorm2dLayer(ps, prefix + ".bn2", cfg.c2);
  conv3_ = Conv2dLayer(ps, prefix + ".conv3", cfg.c2, cfg.c3, 3, 1, 1, rng);
  bn3_ = BatchNorm2dLayer(ps, prefix + ".bn3", cfg.c3);
  l1_ = LinearLayer(ps, prefix + ".fc1", cfg.c3 * kFlat, cfg.fc1, rng);
  l2_ = LinearLayer(ps, prefix + ".fc2", cfg.fc1, cfg.fc2, rng);
}

nn::ValueId CnnEncoder::forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                                bool training) const {
  if (obs_batch.numel() != batch * env::kObsSize)
    throw std::invalid_argument("CnnEncoder: observation batch has " +
                                std::to_string(obs_batch.numel()) + " values, expected " +
                                std::to_string(batch * env::kObsSize));
  nn::Tensor maps({batch, kChannels, env::kObsH, env::kObsW});
  for (int i = 0; i < maps.numel(); ++i)
    maps.data[static_cast<size_t>(i)] = obs_batch.data[static_cast<size_t>(i)] * cfg_.input_scale;
  nn::ValueId x = t.constant(std::move(maps));
  x = t.relu(bn1_.forward(t, conv1_.forward(t, x), training));
  x = t.relu(bn2_.forward(t, conv2_.forward(t, x), training));
  x = t.relu(bn3_.forward(t, conv3_.forward(t, x), training));
  x = t.reshape(x, {batch, cfg_.c3 * kFlat});
  x = t.relu(l1_.forward(t, x));
  return t.relu(l2_.forward(t, x));
}

}  // namespace sg::policy
