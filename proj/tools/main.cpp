// Benchmark harness: training launches, evaluations, the alpha-sweep
// trade-off table, and scripted simulator traces.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stablegrasp/bench/evaluator.hpp"
#include "stablegrasp/bench/oracle.hpp"
#include "stablegrasp/bench/run_config.hpp"
#include "stablegrasp/bench/trace.hpp"
#include "stablegrasp/sac/trainer.hpp"

namespace fs = std::filesystem;
using namespace sg;

namespace {

bench::RunConfig load_config(const std::string& path) {
  if (path.empty()) return bench::RunConfig{};
  return bench::RunConfig::load(path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

policy::Arch detect_arch(const std::string& checkpoint) {
  for (const auto& [name, t] : sac::read_checkpoint(checkpoint))
    if (name == "actor/actor.enc.readout") return policy::Arch::transformer;
  return policy::Arch::cnn;
}

policy::Actor load_actor(const std::string& checkpoint, bench::RunConfig& cfg) {
  cfg.policy.arch = detect_arch(checkpoint);
  policy::Actor actor(cfg.policy, 0);
  sac::load_group(checkpoint, "actor", actor.params());
  return actor;
}

bench::EvalReport eval_checkpoint(const std::string& checkpoint, bench::RunConfig cfg,
                                  int episodes, uint64_t seed, const std::string& out_dir) {
  policy::Actor actor = load_actor(checkpoint, cfg);
  nn::Rng unused(0);
  bench::EvalReport report = bench::evaluate(
      cfg,
      [&](const env::GraspEnv&, const nn::Tensor& obs) { return actor.act(obs, true, unused); },
      episodes, seed);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    bench::write_report_json(report, (fs::path(out_dir) / "report.json").string());
    bench::write_report_csv(report, (fs::path(out_dir) / "episodes.csv").string());
  }
  return report;
}

std::string train_run(bench::RunConfig cfg, policy::Arch arch, double alpha, uint64_t seed,
                      const std::string& out_dir) {
  cfg.policy.arch = arch;
  cfg.reward.alpha = static_cast<float>(alpha);
  sac::Trainer trainer(cfg.policy, cfg.env, cfg.reward, cfg.train, seed);
  sac::TrainResult res = trainer.train(out_dir);
  std::printf("trained %s alpha=%g: %d episodes, %lld env steps, %lld updates -> %s\n",
              policy::to_string(arch).c_str(), alpha, res.episodes, res.env_steps, res.updates,
              res.checkpoint_path.c_str());
  return res.checkpoint_path;
}

int run_train(const std::string& config_path, const std::string& arch_s,
              std::optional<double> alpha, std::optional<uint64_t> seed,
              const std::string& out_dir) {
  bench::RunConfig cfg = load_config(config_path);
  train_run(cfg, policy::arch_from_string(arch_s),
            alpha.value_or(static_cast<double>(cfg.reward.alpha)), seed.value_or(cfg.seed),
            out_dir);
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint, int episodes,
             std::optional<uint64_t> seed, const std::string& out_dir, bool oracle) {
  bench::RunConfig cfg = load_config(config_path);
  int n = episodes > 0 ? episodes : cfg.eval_episodes;
  uint64_t s = seed.value_or(cfg.seed);
  bench::EvalReport report;
  if (oracle) {
    report = bench::evaluate(
        cfg, [](const env::GraspEnv& e, const nn::Tensor&) { return bench::oracle_policy(e); },
        n, s);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      bench::write_report_json(report, (fs::path(out_dir) / "report.json").string());
      bench::write_report_csv(report, (fs::path(out_dir) / "episodes.csv").string());
    }
  } else {
    report = eval_checkpoint(checkpoint, cfg, n, s, out_dir);
  }
  std::printf("episodes %d  success_rate %.3f  avg_attempts %.3f  avg_excess_force %.3f\n",
              report.n_episodes, report.success_rate, report.avg_attempts,
              report.avg_excess_force);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& alphas_s,
              const std::string& archs_s, std::optional<uint64_t> seed, int episodes,
              const std::string& out_dir, bool train_missing) {
  bench::RunConfig cfg = load_config(config_path);
  uint64_t s = seed.value_or(cfg.seed);
  int n = episodes > 0 ? episodes : cfg.eval_episodes;
  fs::create_directories(out_dir);

  struct Row {
    std::string arch;
    double alpha;
    bench::EvalReport report;
  };
  std::vector<Row> rows;
  for (const std::string& arch_s : split_list(archs_s)) {
    policy::Arch arch = policy::arch_from_string(arch_s);
    for (const std::string& alpha_s : split_list(alphas_s)) {
      double alpha = std::stod(alpha_s);
      if (!(alpha > 0.0)) throw CLI::ValidationError("--alphas", "alpha must be positive");
      std::string run_dir =
          (fs::path(out_dir) / (arch_s + "_alpha" + alpha_s)).string();
      std::string checkpoint = (fs::path(run_dir) / "checkpoint.tgl").string();
      if (!fs::exists(checkpoint)) {
        if (!train_missing)
          throw std::runtime_error("missing checkpoint: " + checkpoint +
                                   " (pass --train-missing to train in-line)");
        train_run(cfg, arch, alpha, nn::hash64(s, static_cast<uint64_t>(alpha)), run_dir);
      }
      bench::RunConfig run_cfg = cfg;
      run_cfg.reward.alpha = static_cast<float>(alpha);
      rows.push_back({arch_s, alpha, eval_checkpoint(checkpoint, run_cfg, n, s, run_dir)});
    }
  }

  std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
  std::ofstream csv(csv_path, std::ios::trunc);
  csv << "arch,alpha,success_rate,avg_attempts,avg_excess_force\n";
  char buf[160];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%g,%.9g,%.9g,%.9g\n", r.arch.c_str(), r.alpha,
                  r.report.success_rate, r.report.avg_attempts, r.report.avg_excess_force);
    csv << buf;
  }

  std::printf("%-12s %6s %13s %13s %17s\n", "arch", "alpha", "success_rate", "avg_attempts",
              "avg_excess_force");
  for (const Row& r : rows)
    std::printf("%-12s %6g %13.3f %13.3f %17.3f\n", r.arch.c_str(), r.alpha,
                r.report.success_rate, r.report.avg_attempts, r.report.avg_excess_force);
  std::printf("table written to %s\n", csv_path.c_str());
  return 0;
}

int run_trace(const std::string& config_path, const std::string& scenario,
              const std::string& out_csv) {
  bench::RunConfig cfg = load_config(config_path);
  bench::TraceResult r = bench::run_trace(scenario, cfg);
  bench::write_trace_csv(r, out_csv);
  std::string maps_csv = out_csv + ".maps.csv";
  bench::write_trace_maps_csv(r, maps_csv);
  std::printf("%s: theta_final %.4f rad, slip %.4f m, load moved %.4f m -> %s, %s\n",
              scenario.c_str(), r.lift.tilt_final, r.lift.slip_final, r.lift.load_displacement,
              out_csv.c_str(), maps_csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable-grasp benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, arch = "transformer", checkpoint, scenario, out_csv;
  std::string alphas = "10,30,50", archs = "transformer,cnn";
  std::optional<double> alpha;
  int episodes = 0;
  std::optional<uint64_t> seed;
  bool oracle = false, train_missing = false;

  CLI::App* train = app.add_subcommand("train", "train one policy");
  train->add_option("--config", config_path, "run config file");
  train->add_option("--arch", arch, "transformer|cnn")->capture_default_str();
  train->add_option("--alpha", alpha, "reward weight (default: config)")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", seed, "master seed (default: config)");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint deterministically");
  eval->add_option("--config", config_path, "run config file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint path");
  eval->add_flag("--oracle", oracle, "evaluate the privileged oracle policy instead");
  eval->add_option("--episodes", episodes, "episode count (default: config)");
  eval->add_option("--seed", seed, "evaluation seed (default: config)");
  eval->add_option("--out", out_dir, "report output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "Table-I-style arch x alpha study");
  sweep->add_option("--config", config_path, "run config file");
  sweep->add_option("--alphas", alphas, "comma list")->capture_default_str();
  sweep->add_option("--archs", archs, "comma list")->capture_default_str();
  sweep->add_option("--episodes", episodes, "eval episodes per cell (default: config)");
  sweep->add_option("--seed", seed, "master seed (default: config)");
  sweep->add_flag("--train-missing", train_missing, "train cells whose checkpoint is absent");
  sweep->add_option("--out", out_dir, "sweep directory")->required();

  CLI::App* trace = app.add_subcommand("trace", "scripted single-lift simulator dump");
  trace->add_option("--config", config_path, "run config file");
  trace->add_option("--scenario", scenario, "com-grasp|offset-grasp|low-friction-slide|opposite-side")
      ->required();
  trace->add_option("--out", out_csv, "trace CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (train->parsed()) return run_train(config_path, arch, alpha, seed, out_dir);
    if (eval->parsed()) {
      if (!oracle && checkpoint.empty())
        throw CLI::ValidationError("--checkpoint", "required unless --oracle is given");
      return run_eval(config_path, checkpoint, episodes, seed, out_dir, oracle);
    }
    if (sweep->parsed())
      return run_sweep(config_path, alphas, archs, seed, episodes, out_dir, train_missing);
    if (trace->parsed()) return run_trace(config_path, scenario, out_csv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
