#include "stablegrasp/policy/actor_critic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sg::policy {

Arch arch_from_string(const std::string& s) {
  if (s == "transformer") return Arch::transformer;
  if (s == "cnn") return Arch::cnn;
  throw std::invalid_argument("unknown architecture '" + s + "' (want transformer|cnn)");
}

std::string to_string(Arch a) { return a == Arch::transformer ? "transformer" : "cnn"; }

std::unique_ptr<Encoder> make_encoder(nn::ParameterSet& ps, const std::string& prefix,
                                      const PolicyConfig& cfg, nn::Rng& rng) {
  if (cfg.arch == Arch::transformer)
    return std::make_unique<TransformerEncoder>(ps, prefix, cfg.transformer, rng);
  return std::make_unique<CnnEncoder>(ps, prefix, cfg.cnn, rng);
}

namespace {

nn::Tensor action_scales(const PolicyConfig& cfg, bool inverse) {
  nn::Tensor s({1, env::kActionDim});
  s.data[0] = inverse ? 1.0f / cfg.dx_scale : cfg.dx_scale;
  s.data[1] = inverse ? 1.0f / cfg.df_scale : cfg.df_scale;
  return s;
}

}  // namespace

Actor::Actor(const PolicyConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg.dx_scale <= 0.0f || cfg.df_scale <= 0.0f)
    throw std::invalid_argument("Actor: action scales must be positive");
  nn::Rng rng(seed);
  encoder_ = make_encoder(params_, "actor.enc", cfg, rng);
  int h = cfg.head_hidden;
  head_ = Mlp(params_, "actor.head",
              {encoder_->embed_dim(), h, h, h, 2 * env::kActionDim}, rng);
}

Actor::Dist Actor::forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch,
                           bool training) const {
  nn::ValueId emb = encoder_->forward(t, obs_batch, batch, training);
  nn::ValueId out = head_.forward(t, emb);
  Dist d;
  d.mean = t.slice_cols(out, 0, env::kActionDim);
  d.log_std = t.clamp(t.slice_cols(out, env::kActionDim, 2 * env::kActionDim), cfg_.log_std_min,
                      cfg_.log_std_max);
  return d;
}

Actor::Sample Actor::sample(nn::Tape& t, const Dist& d, int batch, nn::Rng& rng) const {
  nn::Tensor eps({batch, env::kActionDim});
  for (auto& e : eps.data) e = rng.normal_f();
  nn::ValueId u = t.add(d.mean, t.mul(t.exp_(d.log_std), t.constant(std::move(eps))));

  // tanh change of variables: log(1 - tanh(u)^2) = 2(ln2 - u - softplus(-2u))
  nn::ValueId corr =
      t.scale(t.add_scalar(t.add(u, t.softplus(t.scale(u, -2.0f))), -std::numbers::ln2_v<float>),
              -2.0f);
  nn::ValueId lp = t.sub(t.gaussian_log_prob(d.mean, d.log_std, u), t.sum_cols(corr));
  lp = t.add_scalar(lp, -(std::log(cfg_.dx_scale) + std::log(cfg_.df_scale)));

  Sample s;
  s.action = t.mul_row(t.tanh_(u), t.constant(action_scales(cfg_, false)));
  s.log_prob = lp;
  return s;
}

nn::ValueId Actor::mean_action(nn::Tape& t, const Dist& d) const {
  return t.mul_row(t.tanh_(d.mean), t.constant(action_scales(cfg_, false)));
}

env::Action Actor::act(const nn::Tensor& obs, bool deterministic, nn::Rng& rng) const {
  nn::Tape t;
  Dist d = forward(t, obs, 1, false);
  nn::ValueId a = deterministic ? mean_action(t, d) : sample(t, d, 1, rng).action;
  const nn::Tensor& v = t.value(a);
  return {v.data[0], v.data[1]};
}

Critic::Critic(const PolicyConfig& cfg, uint64_t seed) : cfg_(cfg) {
  nn::Rng rng(seed);
  encoder_ = make_encoder(params_, "critic.enc", cfg, rng);
  int h = cfg.head_hidden;
  head_ = Mlp(params_, "critic.head",
              {encoder_->embed_dim() + env::kActionDim, h, h, h, 1}, rng);
}

nn::ValueId Critic::forward(nn::Tape& t, const nn::Tensor& obs_batch, nn::ValueId action,
                            int batch, bool training) const {
  nn::ValueId emb = encoder_->forward(t, obs_batch, batch, training);
  nn::ValueId na = t.mul_row(action, t.constant(action_scales(cfg_, true)));
  return head_.forward(t, t.concat_cols(emb, na));
}

void copy_values(const nn::ParameterSet& src, nn::ParameterSet& dst) {
  if (src.size() != dst.size())
    throw std::invalid_argument("copy_values: parameter sets differ in size");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].value.numel() != dst[i].value.numel())
      throw std::invalid_argument("copy_values: shape mismatch at " + src[i].name);
    dst[i].value.data = src[i].value.data;
  }
}

void polyak_update(const nn::ParameterSet& src, nn::ParameterSet& dst, float tau) {
  if (src.size() != dst.size())
    throw std::invalid_argument("polyak_update: parameter sets differ in size");
  for (size_t i = 0; i < src.size(); ++i)
    for (size_t j = 0; j < dst[i].value.data.size(); ++j)
      dst[i].value.data[j] = (1.0f - tau) * dst[i].value.data[j] + tau * src[i].value.data[j];
}

}  // namespace sg::policy
