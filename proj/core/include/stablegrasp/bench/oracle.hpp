#pragma once

#include "stablegrasp/env/env.hpp"

namespace sg::bench {

/// Privileged ground-truth controller used only to validate that the
/// task is solvable: moves the grasp toward the combined CoM and sets
/// the grip force to hold the total weight with a 5% margin. Never sees
/// tactile data.
env::Action oracle_policy(const env::GraspEnv& e);

}  // namespace sg::bench
