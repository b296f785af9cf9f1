#pragma once

#include <memory>
#include <vector>

#include "stablegrasp/env/env.hpp"

namespace sg::env {

/// Batched facade over n independent environments with auto-reset.
/// Per-env seeds are derived as hash64(master_seed, i); stepping is
/// sequential in index order for deterministic replay.
class VectorEnv {
 public:
  struct StepResult {
    StepOutcome outcome;         // outcome of the attempt, incl. the true next observation
    bool episode_end = false;    // terminal or truncated; env was auto-reset
    nn::Tensor policy_obs;       // observation the policy should act on next
  };

  VectorEnv(int n, EnvParams params, RewardConfig reward, uint64_t master_seed);

  std::vector<nn::Tensor> reset();
  std::vector<StepResult> step(const std::vector<Action>& actions);

  int size() const { return static_cast<int>(envs_.size()); }
  GraspEnv& env(int i) { return *envs_.at(static_cast<size_t>(i)); }

 private:
  std::vector<std::unique_ptr<GraspEnv>> envs_;
};

}  // namespace sg::env
