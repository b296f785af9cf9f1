#include "stablegrasp/bench/evaluator.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sg::bench {

void recompute_aggregates(EvalReport& r) {
  r.n_episodes = static_cast<int>(r.rows.size());
  r.successes = 0;
  double attempts = 0.0, excess = 0.0;
  for (const EpisodeRow& row : r.rows) {
    attempts += row.attempts;
    if (row.success) {
      ++r.successes;
      excess += row.delta_f;
    }
  }
  r.success_rate = r.n_episodes ? static_cast<double>(r.successes) / r.n_episodes : 0.0;
  r.avg_attempts = r.n_episodes ? attempts / r.n_episodes : 0.0;
  r.avg_excess_force = r.successes ? excess / r.successes : 0.0;
}

EvalReport evaluate(const RunConfig& cfg, const PolicyFn& policy, int episodes, uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: need at least one episode");
  env::GraspEnv e(cfg.env, cfg.reward, seed);
  EvalReport report;
  report.rows.reserve(static_cast<size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep) {
    nn::Tensor obs = e.reset(nn::hash64(seed, static_cast<uint64_t>(ep)));
    env::StepOutcome last;
    while (true) {
      last = e.step(policy(e, obs));
      obs = last.observation;
      if (last.terminal || last.truncated) break;
    }
    EpisodeRow row;
    row.episode = ep;
    row.weight_g = e.world().load_mass * 1000.0;
    row.final_force_n = e.state().grip_force;
    row.w_hat = e.normalized_weight();
    row.f_hat = e.normalized_force();
    row.delta_f = row.f_hat - row.w_hat;
    row.attempts = last.terminal ? last.attempt_index : cfg.env.max_attempts;
    row.success = last.terminal;
    report.rows.push_back(row);
  }
  recompute_aggregates(report);
  return report;
}

void write_report_json(const EvalReport& r, const std::string& path) {
  nlohmann::json j;
  j["n_episodes"] = r.n_episodes;
  j["successes"] = r.successes;
  j["success_rate"] = r.success_rate;
  j["avg_attempts"] = r.avg_attempts;
  j["avg_excess_force"] = r.avg_excess_force;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open report for writing: " + path);
  os << j.dump(2) << "\n";
}

void write_report_csv(const EvalReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open episode CSV for writing: " + path);
  os << "episode,weight_g,final_force_n,w_hat,f_hat,delta_f,attempts,success\n";
  char row[256];
  for (const EpisodeRow& e : r.rows) {
    std::snprintf(row, sizeof row, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d\n", e.episode, e.weight_g,
                  e.final_force_n, e.w_hat, e.f_hat, e.delta_f, e.attempts, e.success ? 1 : 0);
    os << row;
  }
  if (!os) throw std::runtime_error("write failure on episode CSV: " + path);
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open episode CSV: " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "episode,weight_g,final_force_n,w_hat,f_hat,delta_f,attempts,success")
    throw std::runtime_error(path + ": unexpected episode CSV header");
  EvalReport r;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EpisodeRow e;
    int success = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%d,%d", &e.episode, &e.weight_g,
                    &e.final_force_n, &e.w_hat, &e.f_hat, &e.delta_f, &e.attempts,
                    &success) != 8)
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    e.success = success != 0;
    r.rows.push_back(e);
  }
  recompute_aggregates(r);
  return r;
}

}  // namespace sg::bench
