#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stablegrasp/bench/run_config.hpp"
#include "stablegrasp/env/env.hpp"

namespace sg::bench {

/// One evaluation episode (Fig.-7-style scatter row).
struct EpisodeRow {
  int episode = 0;
  double weight_g = 0.0;       // drawn load mass, grams
  double final_force_n = 0.0;  // per-finger grip force at episode end
  double w_hat = 0.0;          // normalized total weight
  double f_hat = 0.0;          // normalized final force
  double delta_f = 0.0;        // f_hat - w_hat at episode end
  int attempts = 0;            // failures count their full truncation length
  bool success = false;
};

struct EvalReport {
  int n_episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double avg_attempts = 0.0;
  double avg_excess_force = 0.0;  // over successful terminations only; 0 if none
  std::vector<EpisodeRow> rows;
};

/// Acts on a single environment; given the latest observation, returns
/// the next action. Privileged policies may inspect the env directly.
using PolicyFn = std::function<env::Action(const env::GraspEnv&, const nn::Tensor& obs)>;

/// Sequential episode rollouts with per-episode seeds derived from
/// `seed`; aggregates per the documented averaging conventions.
EvalReport evaluate(const RunConfig& cfg, const PolicyFn& policy, int episodes, uint64_t seed);

/// Recomputes the aggregate fields from rows (shared with the report
/// self-check tests).
void recompute_aggregates(EvalReport& r);

void write_report_json(const EvalReport& r, const std::string& path);
void write_report_csv(const EvalReport& r, const std::string& path);
EvalReport read_report_csv(const std::string& path);

}  // namespace sg::bench
