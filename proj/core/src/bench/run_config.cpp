#include "stablegrasp/bench/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sg::bench {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
  size_t used = 0;
  double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters in number '" + v + "'");
  return x;
}

int parse_int(const std::string& v) {
  size_t used = 0;
  long x = std::stol(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters in integer '" + v + "'");
  return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& v) {
  size_t used = 0;
  unsigned long long x = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters in integer '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

}  // namespace

RunConfig::RunConfig() { finalize(); }

void RunConfig::finalize() {
  policy.dx_scale = static_cast<float>(env.dx_max);
  policy.df_scale = static_cast<float>(env.df_max);
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> table = {
      // world template
      {"world.bar_length", [](RunConfig& c, const std::string& v) { c.env.world.bar_length = parse_double(v); }},
      {"world.bar_mass", [](RunConfig& c, const std::string& v) { c.env.world.bar_mass = parse_double(v); }},
      {"world.stopper_margin", [](RunConfig& c, const std::string& v) { c.env.world.stopper_margin = parse_double(v); }},
      {"world.load_mass", [](RunConfig& c, const std::string& v) { c.env.world.load_mass = parse_double(v); }},
      {"world.load_halfwidth", [](RunConfig& c, const std::string& v) { c.env.world.load_halfwidth = parse_double(v); }},
      {"world.load_bar_friction", [](RunConfig& c, const std::string& v) { c.env.world.load_bar_friction = parse_double(v); }},
      {"world.gripper_bar_friction", [](RunConfig& c, const std::string& v) { c.env.world.gripper_bar_friction = parse_double(v); }},
      {"world.grip_torsion_radius", [](RunConfig& c, const std::string& v) { c.env.world.grip_torsion_radius = parse_double(v); }},
      {"world.lift_height", [](RunConfig& c, const std::string& v) { c.env.world.lift_height = parse_double(v); }},
      {"world.lift_duration", [](RunConfig& c, const std::string& v) { c.env.world.lift_duration = parse_double(v); }},
      {"world.substeps_per_lift", [](RunConfig& c, const std::string& v) { c.env.world.substeps_per_lift = parse_int(v); }},
      {"world.gravity", [](RunConfig& c, const std::string& v) { c.env.world.gravity = parse_double(v); }},
      {"world.tilt_rate_gain", [](RunConfig& c, const std::string& v) { c.env.world.tilt_rate_gain = parse_double(v); }},
      {"world.slip_rate_gain", [](RunConfig& c, const std::string& v) { c.env.world.slip_rate_gain = parse_double(v); }},
      {"world.tilt_cap", [](RunConfig& c, const std::string& v) { c.env.world.tilt_cap = parse_double(v); }},
      {"world.patch_height", [](RunConfig& c, const std::string& v) { c.env.world.patch_height = parse_double(v); }},
      {"world.patch_width", [](RunConfig& c, const std::string& v) { c.env.world.patch_width = parse_double(v); }},
      {"world.taxel_noise_std", [](RunConfig& c, const std::string& v) { c.env.world.taxel_noise_std = parse_double(v); }},
      {"world.collision_shear_gain", [](RunConfig& c, const std::string& v) { c.env.world.collision_shear_gain = parse_double(v); }},
      // environment
      {"env.load_mass_min", [](RunConfig& c, const std::string& v) { c.env.load_mass_min = parse_double(v); }},
      {"env.load_mass_max", [](RunConfig& c, const std::string& v) { c.env.load_mass_max = parse_double(v); }},
      {"env.friction_min", [](RunConfig& c, const std::string& v) { c.env.friction_min = parse_double(v); }},
      {"env.friction_max", [](RunConfig& c, const std::string& v) { c.env.friction_max = parse_double(v); }},
      {"env.size_jitter", [](RunConfig& c, const std::string& v) { c.env.size_jitter = parse_double(v); }},
      {"env.force_min", [](RunConfig& c, const std::string& v) { c.env.force_min = parse_double(v); }},
      {"env.force_max", [](RunConfig& c, const std::string& v) { c.env.force_max = parse_double(v); }},
      {"env.dx_max", [](RunConfig& c, const std::string& v) { c.env.dx_max = parse_double(v); }},
      {"env.df_max", [](RunConfig& c, const std::string& v) { c.env.df_max = parse_double(v); }},
      {"env.max_attempts", [](RunConfig& c, const std::string& v) { c.env.max_attempts = parse_int(v); }},
      // reward
      {"reward.alpha", [](RunConfig& c, const std::string& v) { c.reward.alpha = static_cast<float>(parse_double(v)); }},
      {"reward.theta_norm", [](RunConfig& c, const std::string& v) { c.reward.theta_norm = static_cast<float>(parse_double(v)); }},
      {"reward.slip_norm", [](RunConfig& c, const std::string& v) { c.reward.slip_norm = static_cast<float>(parse_double(v)); }},
      {"reward.tau_r", [](RunConfig& c, const std::string& v) { c.reward.tau_r = static_cast<float>(parse_double(v)); }},
      {"reward.tau_s", [](RunConfig& c, const std::string& v) { c.reward.tau_s = static_cast<float>(parse_double(v)); }},
      // policy
      {"policy.arch", [](RunConfig& c, const std::string& v) { c.policy.arch = policy::arch_from_string(v); }},
      {"policy.token_dim", [](RunConfig& c, const std::string& v) { c.policy.transformer.token_dim = parse_int(v); }},
      {"policy.mlp_dim", [](RunConfig& c, const std::string& v) { c.policy.transformer.mlp_dim = parse_int(v); }},
      {"policy.depth", [](RunConfig& c, const std::string& v) { c.policy.transformer.depth = parse_int(v); }},
      {"policy.num_heads", [](RunConfig& c, const std::string& v) { c.policy.transformer.num_heads = parse_int(v); }},
      {"policy.tok_channels", [](RunConfig& c, const std::string& v) { c.policy.transformer.tok_channels = parse_int(v); }},
      {"policy.readout_only_attention", [](RunConfig& c, const std::string& v) { c.policy.transformer.readout_only_attention = parse_bool(v); }},
      {"policy.input_scale", [](RunConfig& c, const std::string& v) {
         c.policy.transformer.input_scale = static_cast<float>(parse_double(v));
         c.policy.cnn.input_scale = c.policy.transformer.input_scale;
       }},
      {"policy.readout_init_std", [](RunConfig& c, const std::string& v) { c.policy.transformer.readout_init_std = static_cast<float>(parse_double(v)); }},
      {"policy.cnn_c1", [](RunConfig& c, const std::string& v) { c.policy.cnn.c1 = parse_int(v); }},
      {"policy.cnn_c2", [](RunConfig& c, const std::string& v) { c.policy.cnn.c2 = parse_int(v); }},
      {"policy.cnn_c3", [](RunConfig& c, const std::string& v) { c.policy.cnn.c3 = parse_int(v); }},
      {"policy.cnn_fc1", [](RunConfig& c, const std::string& v) { c.policy.cnn.fc1 = parse_int(v); }},
      {"policy.cnn_fc2", [](RunConfig& c, const std::string& v) { c.policy.cnn.fc2 = parse_int(v); }},
      {"policy.head_hidden", [](RunConfig& c, const std::string& v) { c.policy.head_hidden = parse_int(v); }},
      {"policy.log_std_min", [](RunConfig& c, const std::string& v) { c.policy.log_std_min = static_cast<float>(parse_double(v)); }},
      {"policy.log_std_max", [](RunConfig& c, const std::string& v) { c.policy.log_std_max = static_cast<float>(parse_double(v)); }},
      // training
      {"train.total_env_steps", [](RunConfig& c, const std::string& v) { c.train.total_env_steps = parse_int(v); }},
      {"train.n_envs", [](RunConfig& c, const std::string& v) { c.train.n_envs = parse_int(v); }},
      {"train.batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_int(v); }},
      {"train.gamma", [](RunConfig& c, const std::string& v) { c.train.gamma = static_cast<float>(parse_double(v)); }},
      {"train.tau_polyak", [](RunConfig& c, const std::string& v) { c.train.tau_polyak = static_cast<float>(parse_double(v)); }},
      {"train.lr", [](RunConfig& c, const std::string& v) { c.train.lr = static_cast<float>(parse_double(v)); }},
      {"train.entropy_target", [](RunConfig& c, const std::string& v) { c.train.entropy_target = static_cast<float>(parse_double(v)); }},
      {"train.init_entropy_coef", [](RunConfig& c, const std::string& v) { c.train.init_entropy_coef = static_cast<float>(parse_double(v)); }},
      {"train.warmup_steps", [](RunConfig& c, const std::string& v) { c.train.warmup_steps = parse_int(v); }},
      {"train.updates_per_env_step", [](RunConfig& c, const std::string& v) { c.train.updates_per_env_step = parse_double(v); }},
      {"train.buffer_capacity", [](RunConfig& c, const std::string& v) { c.train.buffer_capacity = parse_int(v); }},
      {"train.checkpoint_every", [](RunConfig& c, const std::string& v) { c.train.checkpoint_every = parse_int(v); }},
      {"train.ablate_done_mask", [](RunConfig& c, const std::string& v) { c.train.ablate_done_mask = parse_bool(v); }},
      // harness
      {"eval.episodes", [](RunConfig& c, const std::string& v) { c.eval_episodes = parse_int(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
  };

  auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  try {
    it->second(*this, value);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument("bad value for '" + key + "': " + e.what());
  }
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      cfg.apply(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str(), path);
}

}  // namespace sg::bench
