#include "stablegrasp/bench/trace.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sg::bench {

std::vector<std::string> trace_scenario_names() {
  return {"com-grasp", "offset-grasp", "low-friction-slide", "opposite-side"};
}

TraceResult run_trace(const std::string& scenario, const RunConfig& cfg) {
  TraceResult out;
  out.scenario = scenario;
  out.world = cfg.env.world;
  sim::WorldState s;

  if (scenario == "com-grasp" || scenario == "offset-grasp" || scenario == "opposite-side") {
    out.world.load_mass = 0.050;
    out.world.load_bar_friction = 0.14;
    s.load_pos = 0.160;
    s.grip_force = 2.0;
    double com = sim::combined_com(out.world, s.load_pos);
    if (scenario == "com-grasp") s.grasp_x = com;
    if (scenario == "offset-grasp") s.grasp_x = com - 0.030;
    if (scenario == "opposite-side") s.grasp_x = com + 0.030;
  } else if (scenario == "low-friction-slide") {
    // bar re-grasped at the CoM after it has already pivoted to the tilt
    // cap; the load slides the length of the bar and strikes the stopper
    out.world.load_mass = 0.100;
    out.world.load_bar_friction = 0.05;  // well under tan(tilt_cap): sustained slide
    s.load_pos = 0.050;
    s.grip_force = 1.2;
    s.grasp_x = sim::combined_com(out.world, s.load_pos);
    s.tilt = out.world.tilt_cap;
  } else {
    std::string names;
    for (const std::string& n : trace_scenario_names()) names += (names.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown trace scenario '" + scenario + "' (valid: " + names +
                                ")");
  }

  out.world.validate();
  out.initial_state = s;
  nn::Rng rng(nn::hash64(cfg.seed, 0x7ace));
  out.lift = sim::run_lift(s, out.world, rng, &out.records);
  out.final_state = s;
  return out;
}

void write_trace_csv(const TraceResult& r, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open trace CSV for writing: " + path);
  os << "substep,t_s,theta_rad,slip_m,load_pos_m,load_vel_mps,tau_g_nm,shear_mag_mean_n\n";
  char row[256];
  for (const sim::SubstepRecord& rec : r.records) {
    std::snprintf(row, sizeof row, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", rec.substep,
                  rec.t_s, rec.theta_rad, rec.slip_m, rec.load_pos_m, rec.load_vel_mps,
                  rec.tau_g_nm, rec.shear_mag_mean_n);
    os << row;
  }
  if (!os) throw std::runtime_error("write failure on trace CSV: " + path);
}

void write_trace_maps_csv(const TraceResult& r, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open tactile map CSV for writing: " + path);
  os << "sample,component,row";
  for (int c = 0; c < sim::kTaxelCols; ++c) os << ",c" << c;
  os << "\n";
  char cell[32];
  for (int t = 0; t < sim::kTemporalSamples; ++t)
    for (int f = 0; f < sim::kShearDims; ++f)
      for (int row = 0; row < sim::kTaxelRows; ++row) {
        os << t << ',' << f << ',' << row;
        for (int c = 0; c < sim::kTaxelCols; ++c) {
          std::snprintf(cell, sizeof cell, ",%.9g",
                        static_cast<double>(r.lift.samples[static_cast<size_t>(t)].at(f, row, c)));
          os << cell;
        }
        os << "\n";
      }
  if (!os) throw std::runtime_error("write failure on tactile map CSV: " + path);
}

}  // namespace sg::bench
