#pragma once

#include <string>
#include <vector>

#include "stablegrasp/env/vec_env.hpp"
#include "stablegrasp/nn/adam.hpp"
#include "stablegrasp/policy/actor_critic.hpp"
#include "stablegrasp/sac/checkpoint.hpp"
#include "stablegrasp/sac/replay.hpp"

namespace sg::sac {

struct TrainConfig {
  int total_env_steps = 30000;
  int n_envs = 8;
  int batch_size = 256;
  float gamma = 0.99f;
  float tau_polyak = 0.005f;
  float lr = 3e-4f;  // shared by actor, critics, and the entropy coefficient
  float entropy_target = -2.0f;
  float init_entropy_coef = 1.0f;  // starting value of the auto-tuned coefficient
  int warmup_steps = 500;             // env steps acted uniformly at random
  double updates_per_env_step = 1.0;  // gradient updates per collected transition
  int buffer_capacity = 100000;
  int checkpoint_every = 10000;  // env steps between periodic checkpoints; 0 = final only
  bool ablate_done_mask = false;  // ignore `done` in targets (truncation-bug guard tests)

  void validate() const;
};

struct UpdateLosses {
  float critic1 = 0.0f, critic2 = 0.0f, actor = 0.0f, entropy = 0.0f;
};

struct TrainResult {
  int episodes = 0;
  long long env_steps = 0;
  long long updates = 0;
  float entropy_coef = 1.0f;
  std::string checkpoint_path;
  std::string log_path;
};

/// Single-threaded SAC trainer: twin critics with Polyak-averaged
/// targets, tanh-Gaussian actor, entropy coefficient tuned in log space.
class Trainer {
 public:
  Trainer(policy::PolicyConfig pcfg, env::EnvParams eparams, env::RewardConfig reward,
          TrainConfig cfg, uint64_t seed);

  /// Full training run; writes training_log.csv and checkpoints to dir.
  TrainResult train(const std::string& out_dir);

  /// One SAC gradient update from the replay buffer.
  UpdateLosses update_step();

  /// Bootstrap targets y for a batch of transitions (samples a' fresh).
  std::vector<float> critic_targets(const std::vector<const Transition*>& batch);

  ReplayBuffer& buffer() { return buffer_; }
  policy::Actor& actor() { return actor_; }
  policy::Critic& critic1() { return critic1_; }
  policy::Critic& critic2() { return critic2_; }
  policy::Critic& target1() { return target1_; }
  policy::Critic& target2() { return target2_; }
  TrainConfig& config() { return cfg_; }
  float entropy_coef() const;

  CheckpointGroups checkpoint_groups() const;
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  void gather_batch(const std::vector<int>& idx, nn::Tensor& obs, nn::Tensor& act,
                    std::vector<float>& reward, std::vector<bool>& done,
                    nn::Tensor& next_obs) const;
  void check_finite(const char* loss_name, float v) const;

  policy::PolicyConfig pcfg_;
  env::EnvParams eparams_;
  env::RewardConfig reward_;
  TrainConfig cfg_;
  uint64_t seed_;

  policy::Actor actor_;
  policy::Critic critic1_, critic2_, target1_, target2_;
  nn::ParameterSet alpha_set_;
  nn::Adam opt_actor_, opt_critic1_, opt_critic2_, opt_alpha_;
  ReplayBuffer buffer_;
  nn::Rng rng_;
  long long update_count_ = 0;
};

}  // namespace sg::sac
