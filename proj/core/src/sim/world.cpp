#include "stablegrasp/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sg::sim {

namespace {

constexpr double kPinEps = 1e-12;
constexpr double kImpulseVelEps = 1e-6;

struct Derivs {
  double tilt_dot = 0.0;
  double load_acc = 0.0;
};

int sign(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

Derivs derivs(const WorldConfig& cfg, double grasp_x, double grip_force, double tilt,
              double load_pos, double load_vel) {
  Derivs d;
  Capacities cap = grip_capacities(grip_force, cfg);
  double tau = gravity_torque(cfg, load_pos, grasp_x);
  double excess = std::abs(tau) - cap.torsion;
  if (excess > 0.0) d.tilt_dot = cfg.tilt_rate_gain * excess / cap.torsion * sign(tau);

  double mu = cfg.load_bar_friction;
  double g = cfg.gravity;
  double c = std::cos(tilt), s = std::sin(tilt);
  if (std::abs(load_vel) > 0.0) {
    d.load_acc = g * s - sign(load_vel) * mu * g * c;
  } else if (std::abs(std::tan(tilt)) > mu) {
    d.load_acc = g * s - sign(tilt) * mu * g * c;
  }
  return d;
}

}  // namespace

void WorldConfig::validate() const {
  auto pos = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("WorldConfig: ") + what + " must be positive");
  };
  pos(bar_length, "bar_length");
  pos(bar_mass, "bar_mass");
  pos(stopper_margin, "stopper_margin");
  pos(load_mass, "load_mass");
  pos(load_halfwidth, "load_halfwidth");
  pos(load_bar_friction, "load_bar_friction");
  pos(gripper_bar_friction, "gripper_bar_friction");
  pos(grip_torsion_radius, "grip_torsion_radius");
  pos(lift_height, "lift_height");
  pos(lift_duration, "lift_duration");
  pos(tilt_cap, "tilt_cap");
  if (substeps_per_lift < kTemporalSamples - 1)
    throw std::invalid_argument("WorldConfig: substeps_per_lift too small for tactile sampling");
}

float TactileMap::magnitude_mean() const {
  float acc = 0.0f;
  for (int i = 0; i < kTaxelCount; ++i) {
    float v = shear[static_cast<size_t>(i)];
    float h = shear[static_cast<size_t>(kTaxelCount + i)];
    acc += std::sqrt(v * v + h * h);
  }
  return acc / static_cast<float>(kTaxelCount);
}

double combined_com(const WorldConfig& cfg, double load_pos) {
  return (cfg.bar_mass * cfg.bar_center() + cfg.load_mass * load_pos) /
         (cfg.bar_mass + cfg.load_mass);
}

Capacities grip_capacities(double f, const WorldConfig& cfg) {
  double lift = 2.0 * cfg.gripper_bar_friction * f;
  return {lift, lift * cfg.grip_torsion_radius};
}

double gravity_torque(const WorldConfig& cfg, double load_pos, double grasp_x) {
  return cfg.gravity * (cfg.bar_mass * (cfg.bar_center() - grasp_x) +
                        cfg.load_mass * (load_pos - grasp_x));
}

void substep(WorldState& s, const WorldConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("substep: dt must be positive");
  double lo = cfg.load_min(), hi = cfg.load_max();

  s.collision_impulse *= std::exp(-1.0 / 3.0);

  bool pinned = (s.load_pos <= lo + kPinEps && s.tilt <= 0.0) ||
                (s.load_pos >= hi - kPinEps && s.tilt >= 0.0);

  Derivs d1 = derivs(cfg, s.grasp_x, s.grip_force, s.tilt, s.load_pos, s.load_vel);
  // clamp the midpoint too: an overshoot past the cap would fake a
  // steeper incline and trigger sliding that the capped tilt cannot cause
  double tilt_mid = std::clamp(s.tilt + 0.5 * dt * d1.tilt_dot, -cfg.tilt_cap, cfg.tilt_cap);
  double pos_mid = s.load_pos + 0.5 * dt * s.load_vel;
  double vel_mid = s.load_vel + 0.5 * dt * d1.load_acc;
  Derivs d2 = derivs(cfg, s.grasp_x, s.grip_force, tilt_mid, pos_mid, vel_mid);

  s.tilt = std::clamp(s.tilt + dt * d2.tilt_dot, -cfg.tilt_cap, cfg.tilt_cap);

  if (pinned) {
    s.load_vel = 0.0;
  } else {
    double new_vel = s.load_vel + dt * d2.load_acc;
    // friction must not reverse motion
    if (s.load_vel != 0.0 && new_vel * s.load_vel < 0.0 &&
        std::abs(std::tan(s.tilt)) <= cfg.load_bar_friction)
      new_vel = 0.0;
    double new_pos = s.load_pos + dt * vel_mid;
    if (new_pos <= lo) {
      new_pos = lo;
      if (std::abs(new_vel) > kImpulseVelEps)
        s.collision_impulse += cfg.load_mass * std::abs(new_vel);
      new_vel = 0.0;
    } else if (new_pos >= hi) {
      new_pos = hi;
      if (std::abs(new_vel) > kImpulseVelEps)
        s.collision_impulse += cfg.load_mass * std::abs(new_vel);
      new_vel = 0.0;
    }
    s.load_pos = new_pos;
    s.load_vel = new_vel;
  }

  Capacities cap = grip_capacities(s.grip_force, cfg);
  double w = cfg.total_weight();
  double ds = 0.0;
  if (w > cap.lift) ds = dt * cfg.slip_rate_gain * (w - cap.lift) / cap.lift;
  s.slip += ds;
  s.lift_height_attained =
      std::max(0.0, s.lift_height_attained + dt * cfg.lift_height / cfg.lift_duration - ds);
}

TactileMap render_tactile(const WorldState& s, const WorldConfig& cfg, nn::Rng& rng) {
  TactileMap m;
  Capacities cap = grip_capacities(s.grip_force, cfg);
  double w = cfg.total_weight();

  // translational: supported tangential load, vertical component
  double per_taxel = std::min(w, cap.lift) / static_cast<double>(kTaxelCount);

  // torsional: supported torque as a rotational field about the patch center
  double tau = gravity_torque(cfg, s.load_pos, s.grasp_x);
  double tau_sup = std::min(std::abs(tau), cap.torsion) * sign(tau);
  double pitch_v = cfg.patch_height / kTaxelRows;
  double pitch_h = cfg.patch_width / kTaxelCols;
  double r2_sum = 0.0;
  for (int r = 0; r < kTaxelRows; ++r)
    for (int c = 0; c < kTaxelCols; ++c) {
      double v = (r + 0.5 - kTaxelRows * 0.5) * pitch_v;
      double h = (c + 0.5 - kTaxelCols * 0.5) * pitch_h;
      r2_sum += v * v + h * h;
    }
  double k = tau_sup / r2_sum;

  double spike = cfg.collision_shear_gain * s.collision_impulse / static_cast<double>(kTaxelCount);
  double spike_c = spike / std::sqrt(2.0);

  for (int r = 0; r < kTaxelRows; ++r)
    for (int c = 0; c < kTaxelCols; ++c) {
      double v = (r + 0.5 - kTaxelRows * 0.5) * pitch_v;
      double h = (c + 0.5 - kTaxelCols * 0.5) * pitch_h;
      double sv = per_taxel - k * h + spike_c;
      double sh = k * v + spike_c;
      m.at(0, r, c) = static_cast<float>(sv + cfg.taxel_noise_std * rng.normal());
      m.at(1, r, c) = static_cast<float>(sh + cfg.taxel_noise_std * rng.normal());
    }
  return m;
}

LiftTrace run_lift(WorldState& s, const WorldConfig& cfg, nn::Rng& rng,
                   std::vector<SubstepRecord>* trace) {
  if (s.grasp_x < 0.0 || s.grasp_x > cfg.bar_length)
    throw std::invalid_argument("run_lift: grasp location off the bar");
  LiftTrace out;
  double pos0 = s.load_pos;
  int n = cfg.substeps_per_lift;
  double dt = cfg.lift_duration / n;
  int next_sample = 0;
  for (int i = 0; i <= n; ++i) {
    if (next_sample <= kTemporalSamples - 1 &&
        i == (next_sample * n) / (kTemporalSamples - 1)) {
      out.samples[static_cast<size_t>(next_sample)] = render_tactile(s, cfg, rng);
      ++next_sample;
    }
    if (trace) {
      TactileMap m = render_tactile(s, cfg, rng);
      trace->push_back({i, i * dt, s.tilt, s.slip, s.load_pos, s.load_vel,
                        gravity_torque(cfg, s.load_pos, s.grasp_x), m.magnitude_mean()});
    }
    if (i < n) substep(s, cfg, dt);
  }
  out.tilt_final = s.tilt;
  out.slip_final = s.slip;
  out.load_displacement = s.load_pos - pos0;
  return out;
}

void lower(WorldState& s) {
  s.tilt = 0.0;
  s.slip = 0.0;
  s.lift_height_attained = 0.0;
  s.load_vel = 0.0;
  s.collision_impulse = 0.0;
}

}  // namespace sg::sim
