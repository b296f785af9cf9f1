#pragma once

#include <string>

#include "stablegrasp/env/env.hpp"
#include "stablegrasp/policy/actor_critic.hpp"
#include "stablegrasp/sac/trainer.hpp"

namespace sg::bench {

/// Every tunable constant of the stack, settable from a flat
/// "key = value" text file ("#" comments). Defaults match the
/// documented experiment setup; unknown keys are rejected.
struct RunConfig {
  env::EnvParams env;  // includes the world template
  env::RewardConfig reward;
  policy::PolicyConfig policy;
  sac::TrainConfig train;
  int eval_episodes = 500;
  uint64_t seed = 0;

  RunConfig();  // syncs derived fields (action scales) with defaults

  /// Applies one key; throws std::invalid_argument for unknown keys or
  /// unparseable values.
  void apply(const std::string& key, const std::string& value);

  static RunConfig from_text(const std::string& text, const std::string& origin = "<config>");
  static RunConfig load(const std::string& path);

  /// Re-derives dependent fields (policy action scales from env bounds).
  void finalize();
};

}  // namespace sg::bench
