#pragma once

#include <memory>
#include <string>

#include "stablegrasp/policy/encoders.hpp"

namespace sg::policy {

enum class Arch { transformer, cnn };

Arch arch_from_string(const std::string& s);
std::string to_string(Arch a);

struct PolicyConfig {
  Arch arch = Arch::transformer;
  TransformerConfig transformer;
  CnnConfig cnn;
  int head_hidden = 128;  // width of the shallow FC-ReLU head stacks
  float log_std_min = -20.0f;
  float log_std_max = 2.0f;
  float dx_scale = 0.010f;   // m, action bound for the location change
  float df_scale = 0.125f;   // N, action bound for the force change
};

std::unique_ptr<Encoder> make_encoder(nn::ParameterSet& ps, const std::string& prefix,
                                      const PolicyConfig& cfg, nn::Rng& rng);

/// Squashed-Gaussian policy: encoder embedding -> shallow MLP emitting
/// (mean, log_std) per action dim, tanh-squashed and scaled to bounds.
class Actor {
 public:
  Actor(const PolicyConfig& cfg, uint64_t seed);

  struct Dist {
    nn::ValueId mean;     // [batch, 2] pre-squash
    nn::ValueId log_std;  // [batch, 2] clamped
  };

  /// Differentiable distribution parameters for a batch of observations.
  Dist forward(nn::Tape& t, const nn::Tensor& obs_batch, int batch, bool training) const;

  struct Sample {
    nn::ValueId action;    // [batch, 2] in physical units, inside bounds
    nn::ValueId log_prob;  // [batch, 1]
  };

  /// Reparameterized sample with tanh change-of-variables log density.
  Sample sample(nn::Tape& t, const Dist& d, int batch, nn::Rng& rng) const;
  /// Deterministic squashed mean.
  nn::ValueId mean_action(nn::Tape& t, const Dist& d) const;

  /// No-grad convenience for rollouts: one observation in, one action out.
  env::Action act(const nn::Tensor& obs, bool deterministic, nn::Rng& rng) const;

  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const PolicyConfig& config() const { return cfg_; }

 private:
  PolicyConfig cfg_;
  nn::ParameterSet params_;
  std::unique_ptr<Encoder> encoder_;
  Mlp head_;
};

/// Q(s, a): encoder of the same architecture family as the actor
/// (separate weights), the normalized action concatenated into the head.
class Critic {
 public:
  Critic(const PolicyConfig& cfg, uint64_t seed);

  /// action is [batch, 2] in physical units; normalized internally.
  nn::ValueId forward(nn::Tape& t, const nn::Tensor& obs_batch, nn::ValueId action, int batch,
                      bool training) const;

  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 private:
  PolicyConfig cfg_;
  nn::ParameterSet params_;
  std::unique_ptr<Encoder> encoder_;
  Mlp head_;
};

/// value-wise copy between identically shaped parameter sets
void copy_values(const nn::ParameterSet& src, nn::ParameterSet& dst);
/// dst = (1 - tau) * dst + tau * src over trainable-and-buffer values
void polyak_update(const nn::ParameterSet& src, nn::ParameterSet& dst, float tau);

}  // namespace sg::policy
