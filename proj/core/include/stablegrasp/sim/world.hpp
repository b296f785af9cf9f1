#pragma once

#include <array>
#include <vector>

#include "stablegrasp/nn/rng.hpp"

namespace sg::sim {

inline constexpr int kTaxelRows = 8;
inline constexpr int kTaxelCols = 6;
inline constexpr int kShearDims = 2;
inline constexpr int kTaxelCount = kTaxelRows * kTaxelCols;
inline constexpr int kTemporalSamples = 11;

/// Physical constants of one grasp-lift world. Lengths in meters, masses
/// in kg, forces in Newtons.
struct WorldConfig {
  double bar_length = 0.220;
  double bar_mass = 0.030;
  double stopper_margin = 0.010;
  double load_mass = 0.050;
  double load_halfwidth = 0.015;
  double load_bar_friction = 0.14;     // mu, randomized in [0.11, 0.17]
  double gripper_bar_friction = 0.35;  // mu_g, per finger
  double grip_torsion_radius = 0.006;  // c_t
  double lift_height = 0.020;
  double lift_duration = 2.0;
  int substeps_per_lift = 400;
  double gravity = 9.81;
  double tilt_rate_gain = 0.5;   // k_r, rad/s per unit excess-torque ratio
  double slip_rate_gain = 0.01;  // k_s, m/s per unit excess-load ratio
  double tilt_cap = 0.12;
  double patch_height = 0.014;  // sensor patch, taxel-row direction
  double patch_width = 0.010;
  double taxel_noise_std = 1.33e-4;     // N per shear component
  double collision_shear_gain = 60.0;   // N per (kg m/s), spread over the patch
  void validate() const;

  double bar_center() const { return bar_length * 0.5; }
  double load_min() const { return stopper_margin; }
  double load_max() const { return bar_length - stopper_margin; }
  double total_weight() const { return (bar_mass + load_mass) * gravity; }
};

struct WorldState {
  double grasp_x = 0.0;
  double grip_force = 0.0;
  double load_pos = 0.0;
  double load_vel = 0.0;
  double tilt = 0.0;               // rad; positive when the +x side dips
  double slip = 0.0;               // cumulative bar slip in the gripper, m
  double lift_height_attained = 0.0;
  double collision_impulse = 0.0;  // kg m/s, decays over ~3 substeps
};

/// One sensor frame: 2 in-plane shear components on the 8x6 taxel grid,
/// in Newtons per taxel. Component 0 is vertical (lift direction),
/// component 1 horizontal (along the bar).
struct TactileMap {
  std::array<float, kShearDims * kTaxelCount> shear{};
  float& at(int f, int r, int c) { return shear[static_cast<size_t>((f * kTaxelRows + r) * kTaxelCols + c)]; }
  float at(int f, int r, int c) const { return shear[static_cast<size_t>((f * kTaxelRows + r) * kTaxelCols + c)]; }
  float magnitude_mean() const;
};

struct LiftTrace {
  std::array<TactileMap, kTemporalSamples> samples;
  double tilt_final = 0.0;
  double slip_final = 0.0;
  double load_displacement = 0.0;
};

/// Per-substep row for the optional CSV dump.
struct SubstepRecord {
  int substep;
  double t_s, theta_rad, slip_m, load_pos_m, load_vel_mps, tau_g_nm, shear_mag_mean_n;
};

/// Mass-weighted mean position of bar + load.
double combined_com(const WorldConfig& cfg, double load_pos);

struct Capacities {
  double lift;     // N, both fingers
  double torsion;  // N m
};
/// Friction capacities of the two-finger grip at per-finger normal force f.
Capacities grip_capacities(double f, const WorldConfig& cfg);

/// Gravity torque about the grasp point, positive when the combined CoM
/// lies on the +x side of the grasp.
double gravity_torque(const WorldConfig& cfg, double load_pos, double grasp_x);

/// Advances tilt, slip, load motion and lift progress by dt (midpoint
/// integration, stopper collisions resolved inelastically).
void substep(WorldState& s, const WorldConfig& cfg, double dt);

/// Shear field for the current state: translational + torsional +
/// collision terms plus taxel noise drawn from rng.
TactileMap render_tactile(const WorldState& s, const WorldConfig& cfg, nn::Rng& rng);

/// Runs a full lift, sampling kTemporalSamples tactile maps at uniform
/// lift fractions (sample 0 at lift start). Mutates s; load position
/// persists for the next attempt. When trace is non-null a per-substep
/// record (including an extra rendered map per substep) is appended.
LiftTrace run_lift(WorldState& s, const WorldConfig& cfg, nn::Rng& rng,
                   std::vector<SubstepRecord>* trace = nullptr);

/// Lowering phase: deterministically resets tilt and slip, keeps the
/// load where it ended up.
void lower(WorldState& s);

}  // namespace sg::sim
