#include "stablegrasp/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sg::env {

std::pair<float, bool> compute_reward(float delta_r, float delta_s, float delta_f,
                                      const RewardConfig& cfg) {
  if (delta_r > cfg.tau_r || delta_s > cfg.tau_s)
    return {-std::max(delta_r, delta_s), false};
  return {cfg.alpha * (1.0f - delta_f), true};
}

float normalize_force(double f, const EnvParams& p, bool* clamped) {
  double c = std::clamp(f, p.force_min, p.force_max);
  if (clamped) *clamped = c != f;
  return static_cast<float>((c - p.force_min) / (p.force_max - p.force_min));
}

float normalize_weight(double mass_kg, const EnvParams& p, bool* clamped) {
  double c = std::clamp(mass_kg, p.load_mass_min, p.load_mass_max);
  if (clamped) *clamped = c != mass_kg;
  return static_cast<float>((c - p.load_mass_min) / (p.load_mass_max - p.load_mass_min));
}

GraspEnv::GraspEnv(EnvParams params, RewardConfig reward, uint64_t seed)
    : params_(std::move(params)), reward_(reward), rng_(seed), episode_seed_(seed) {
  params_.world.validate();
}

nn::Tensor GraspEnv::reset() { return do_reset(); }

nn::Tensor GraspEnv::reset(uint64_t seed) {
  rng_ = nn::Rng(seed);
  episode_seed_ = seed;
  return do_reset();
}

nn::Tensor GraspEnv::do_reset() {
  world_ = params_.world;
  world_.load_mass = rng_.uniform(params_.load_mass_min, params_.load_mass_max);
  world_.load_bar_friction = rng_.uniform(params_.friction_min, params_.friction_max);
  world_.load_halfwidth =
      params_.world.load_halfwidth * (1.0 + params_.size_jitter * rng_.uniform(-1.0, 1.0));

  state_ = sim::WorldState{};
  state_.load_pos = rng_.uniform(world_.load_min(), world_.load_max());
  state_.grasp_x = world_.bar_center();
  state_.grip_force = 0.5 * (params_.force_min + params_.force_max);

  attempt_ = 0;
  active_ = true;
  sim::LiftTrace trace = sim::run_lift(state_, world_, rng_);
  return observation_from(trace);
}

nn::Tensor GraspEnv::observation_from(const sim::LiftTrace& trace) const {
  nn::Tensor obs({kObsT, kObsS, kObsF, kObsH, kObsW});
  const int per = kObsF * kObsH * kObsW;
  for (int t = 0; t < kObsT; ++t)
    for (int i = 0; i < per; ++i)
      obs.data[static_cast<size_t>(t * per + i)] =
          trace.samples[static_cast<size_t>(t)].shear[static_cast<size_t>(i)];
  return obs;
}

StepOutcome GraspEnv::step(Action a) {
  if (!active_)
    throw std::logic_error("GraspEnv::step: episode already finished; call reset()");

  a.dx = std::clamp(a.dx, -static_cast<float>(params_.dx_max), static_cast<float>(params_.dx_max));
  a.df = std::clamp(a.df, -static_cast<float>(params_.df_max), static_cast<float>(params_.df_max));

  sim::lower(state_);
  // keep the whole sensor patch on the bar
  double patch_half = 0.5 * world_.patch_width;
  state_.grasp_x = std::clamp(state_.grasp_x + a.dx, patch_half, world_.bar_length - patch_half);
  state_.grip_force = std::clamp(state_.grip_force + a.df, params_.force_min, params_.force_max);

  StepOutcome out;
  out.load_pos_before = static_cast<float>(state_.load_pos);
  sim::LiftTrace trace = sim::run_lift(state_, world_, rng_);
  out.observation = observation_from(trace);
  out.load_pos_after = static_cast<float>(state_.load_pos);
  out.grasp_x = static_cast<float>(state_.grasp_x);
  out.grip_force = static_cast<float>(state_.grip_force);

  out.delta_r = std::min(static_cast<float>(std::abs(trace.tilt_final)) / reward_.theta_norm, 1.0f);
  out.delta_s = std::min(static_cast<float>(trace.slip_final) / reward_.slip_norm, 1.0f);
  out.delta_f = normalize_force(state_.grip_force, params_) - normalize_weight(world_.load_mass, params_);
  auto [reward, terminal] = compute_reward(out.delta_r, out.delta_s, out.delta_f, reward_);
  out.reward = reward;
  out.terminal = terminal;

  ++attempt_;
  out.attempt_index = attempt_;
  out.truncated = !terminal && attempt_ >= params_.max_attempts;
  active_ = !(out.terminal || out.truncated);
  return out;
}

}  // namespace sg::env
