#include "stablegrasp/env/vec_env.hpp"

#include <stdexcept>

namespace sg::env {

VectorEnv::VectorEnv(int n, EnvParams params, RewardConfig reward, uint64_t master_seed) {
  if (n < 1) throw std::invalid_argument("VectorEnv: need at least one environment");
  for (int i = 0; i < n; ++i)
    envs_.push_back(std::make_unique<GraspEnv>(params, reward,
                                               nn::hash64(master_seed, static_cast<uint64_t>(i))));
}

std::vector<nn::Tensor> VectorEnv::reset() {
  std::vector<nn::Tensor> obs;
  obs.reserve(envs_.size());
  for (auto& e : envs_) obs.push_back(e->reset());
  return obs;
}

std::vector<VectorEnv::StepResult> VectorEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != envs_.size())
    throw std::invalid_argument("VectorEnv::step: expected " + std::to_string(envs_.size()) +
                                " actions, got " + std::to_string(actions.size()));
  std::vector<StepResult> results;
  results.reserve(envs_.size());
  for (size_t i = 0; i < envs_.size(); ++i) {
    StepResult r;
    r.outcome = envs_[i]->step(actions[i]);
    r.episode_end = r.outcome.terminal || r.outcome.truncated;
    r.policy_obs = r.episode_end ? envs_[i]->reset() : r.outcome.observation;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace sg::env
