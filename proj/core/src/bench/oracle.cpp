#include "stablegrasp/bench/oracle.hpp"

#include <algorithm>

#include "stablegrasp/sim/world.hpp"

namespace sg::bench {

env::Action oracle_policy(const env::GraspEnv& e) {
  const sim::WorldConfig& w = e.world();
  const sim::WorldState& s = e.state();
  double com = sim::combined_com(w, s.load_pos);
  double dx = std::clamp(com - s.grasp_x, -e.params().dx_max, e.params().dx_max);
  // invert the lift capacity 2 mu_g f with a 5% margin
  double f_required = 1.05 * w.total_weight() / (2.0 * w.gripper_bar_friction);
  double df = std::clamp(f_required - s.grip_force, -e.params().df_max, e.params().df_max);
  return {static_cast<float>(dx), static_cast<float>(df)};
}

}  // namespace sg::bench
