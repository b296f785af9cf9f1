#pragma once

#include <string>
#include <vector>

#include "stablegrasp/bench/run_config.hpp"
#include "stablegrasp/sim/world.hpp"

namespace sg::bench {

/// Scripted single-lift scenarios for Fig. 2/3-style inspection.
std::vector<std::string> trace_scenario_names();

struct TraceResult {
  std::string scenario;
  sim::WorldConfig world;
  sim::WorldState initial_state;
  sim::WorldState final_state;
  sim::LiftTrace lift;
  std::vector<sim::SubstepRecord> records;
};

/// Runs one scenario on the config's world template. Unknown scenario
/// names raise an invalid_argument listing the valid ones.
TraceResult run_trace(const std::string& scenario, const RunConfig& cfg);

/// Per-substep rows (substep, t_s, theta, slip, load_pos, load_vel,
/// tau_g, shear_mag_mean).
void write_trace_csv(const TraceResult& r, const std::string& path);
/// The 11 sampled tactile maps, one row per (sample, component, taxel row).
void write_trace_maps_csv(const TraceResult& r, const std::string& path);

}  // namespace sg::bench
