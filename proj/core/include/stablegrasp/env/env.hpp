#pragma once

#include <cstdint>
#include <utility>

#include "stablegrasp/nn/rng.hpp"
#include "stablegrasp/nn/tensor.hpp"
#include "stablegrasp/sim/world.hpp"

namespace sg::env {

inline constexpr int kObsT = sim::kTemporalSamples;
inline constexpr int kObsS = 1;
inline constexpr int kObsF = sim::kShearDims;
inline constexpr int kObsH = sim::kTaxelRows;
inline constexpr int kObsW = sim::kTaxelCols;
inline constexpr int kObsSize = kObsT * kObsS * kObsF * kObsH * kObsW;
inline constexpr int kActionDim = 2;

/// Relative grasp-location / grip-force change, clamped on ingestion.
struct Action {
  float dx = 0.0f;  // m
  float df = 0.0f;  // N
};

/// Episode randomization ranges and action/force bounds.
struct EnvParams {
  double load_mass_min = 0.025, load_mass_max = 0.100;  // kg
  double friction_min = 0.11, friction_max = 0.17;
  double size_jitter = 0.30;  // load halfwidth randomized +-30%
  double force_min = 1.0, force_max = 2.0;  // N per finger
  double dx_max = 0.010, df_max = 0.125;
  int max_attempts = 10;
  sim::WorldConfig world;  // template; per-episode fields drawn on reset
};

struct RewardConfig {
  float alpha = 30.0f;
  float theta_norm = 0.3f;   // rad, full scale of delta_r
  float slip_norm = 0.020f;  // m, full scale of delta_s
  float tau_r = 0.02f / 0.3f;
  float tau_s = 0.003f / 0.020f;
};

struct StepOutcome {
  nn::Tensor observation;  // [T, S, F, H, W]
  float reward = 0.0f;
  float delta_r = 0.0f, delta_s = 0.0f, delta_f = 0.0f;
  bool terminal = false;   // success
  bool truncated = false;  // attempt limit reached without success
  int attempt_index = 0;
  // diagnostics
  float grasp_x = 0.0f, grip_force = 0.0f;
  float load_pos_before = 0.0f, load_pos_after = 0.0f;
};

/// Eq.-style two-objective reward: failing grasps are penalized by the
/// larger of tilt/slip, successful ones rewarded by alpha * (1 - excess
/// force). Returns (reward, terminal).
std::pair<float, bool> compute_reward(float delta_r, float delta_s, float delta_f,
                                      const RewardConfig& cfg);

/// Affine map of grip force onto [0, 1]; out-of-bound inputs are clamped
/// (clamped flag reported when requested).
float normalize_force(double f, const EnvParams& p, bool* clamped = nullptr);
float normalize_weight(double mass_kg, const EnvParams& p, bool* clamped = nullptr);

/// One grasp-lift environment following the act-observe cycle. reset()
/// draws a fresh episode and performs the initial centered grasp; each
/// step() is one re-grasp attempt.
class GraspEnv {
 public:
  GraspEnv(EnvParams params, RewardConfig reward, uint64_t seed);

  nn::Tensor reset();
  nn::Tensor reset(uint64_t seed);
  StepOutcome step(Action a);

  bool episode_active() const { return active_; }
  int attempt() const { return attempt_; }
  uint64_t episode_seed() const { return episode_seed_; }

  // privileged access (oracle policy, diagnostics)
  const sim::WorldConfig& world() const { return world_; }
  const sim::WorldState& state() const { return state_; }
  const EnvParams& params() const { return params_; }
  const RewardConfig& reward_config() const { return reward_; }
  float normalized_force() const { return normalize_force(state_.grip_force, params_); }
  float normalized_weight() const { return normalize_weight(world_.load_mass, params_); }

 private:
  nn::Tensor do_reset();
  nn::Tensor observation_from(const sim::LiftTrace& trace) const;

  EnvParams params_;
  RewardConfig reward_;
  nn::Rng rng_;
  sim::WorldConfig world_;
  sim::WorldState state_;
  uint64_t episode_seed_ = 0;
  int attempt_ = 0;
  bool active_ = false;
};

}  // namespace sg::env
