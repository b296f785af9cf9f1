#include "stablegrasp/sac/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace sg::sac {

void TrainConfig::validate() const {
  if (total_env_steps < 1 || n_envs < 1 || batch_size < 1 || buffer_capacity < 1)
    throw std::invalid_argument("TrainConfig: counts must be positive");
  if (!(gamma > 0.0f && gamma < 1.0f))
    throw std::invalid_argument("TrainConfig: gamma must be in (0, 1)");
  if (!(tau_polyak >= 0.0f && tau_polyak <= 1.0f))
    throw std::invalid_argument("TrainConfig: tau_polyak must be in [0, 1]");
  if (lr <= 0.0f) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (init_entropy_coef <= 0.0f)
    throw std::invalid_argument("TrainConfig: init_entropy_coef must be positive");
  if (warmup_steps < 0 || updates_per_env_step < 0.0 || checkpoint_every < 0)
    throw std::invalid_argument("TrainConfig: negative schedule value");
}

Trainer::Trainer(policy::PolicyConfig pcfg, env::EnvParams eparams, env::RewardConfig reward,
                 TrainConfig cfg, uint64_t seed)
    : pcfg_(pcfg),
      eparams_(eparams),
      reward_(reward),
      cfg_(cfg),
      seed_(seed),
      actor_(pcfg, nn::hash64(seed, 1)),
      critic1_(pcfg, nn::hash64(seed, 2)),
      critic2_(pcfg, nn::hash64(seed, 3)),
      target1_(pcfg, nn::hash64(seed, 2)),
      target2_(pcfg, nn::hash64(seed, 3)),
      opt_actor_(actor_.params(), cfg.lr),
      opt_critic1_(critic1_.params(), cfg.lr),
      opt_critic2_(critic2_.params(), cfg.lr),
      opt_alpha_(alpha_set_, cfg.lr),
      buffer_(cfg.buffer_capacity),
      rng_(nn::hash64(seed, 4)) {
  cfg_.validate();
  nn::Tensor la = nn::Tensor::zeros({1});
  la.data[0] = std::log(cfg_.init_entropy_coef);
  alpha_set_.add("log_alpha", la);
  // same-seed construction already makes targets equal the online
  // critics; copy anyway so the invariant is explicit
  policy::copy_values(critic1_.params(), target1_.params());
  policy::copy_values(critic2_.params(), target2_.params());
}

float Trainer::entropy_coef() const {
  return std::exp(alpha_set_.at("log_alpha").value.data[0]);
}

void Trainer::gather_batch(const std::vector<int>& idx, nn::Tensor& obs, nn::Tensor& act,
                           std::vector<float>& reward, std::vector<bool>& done,
                           nn::Tensor& next_obs) const {
  int b = static_cast<int>(idx.size());
  obs = nn::Tensor({b, env::kObsSize});
  next_obs = nn::Tensor({b, env::kObsSize});
  act = nn::Tensor({b, env::kActionDim});
  reward.resize(static_cast<size_t>(b));
  done.resize(static_cast<size_t>(b));
  for (int i = 0; i < b; ++i) {
    const Transition& tr = buffer_[idx[static_cast<size_t>(i)]];
    std::copy(tr.obs.data.begin(), tr.obs.data.end(),
              obs.data.begin() + static_cast<ptrdiff_t>(i) * env::kObsSize);
    std::copy(tr.next_obs.data.begin(), tr.next_obs.data.end(),
              next_obs.data.begin() + static_cast<ptrdiff_t>(i) * env::kObsSize);
    act.data[static_cast<size_t>(i * env::kActionDim)] = tr.action[0];
    act.data[static_cast<size_t>(i * env::kActionDim + 1)] = tr.action[1];
    reward[static_cast<size_t>(i)] = tr.reward;
    done[static_cast<size_t>(i)] = tr.done;
  }
}

std::vector<float> Trainer::critic_targets(const std::vector<const Transition*>& batch) {
  int b = static_cast<int>(batch.size());
  nn::Tensor next_obs({b, env::kObsSize});
  for (int i = 0; i < b; ++i)
    std::copy(batch[static_cast<size_t>(i)]->next_obs.data.begin(),
              batch[static_cast<size_t>(i)]->next_obs.data.end(),
              next_obs.data.begin() + static_cast<ptrdiff_t>(i) * env::kObsSize);

  float alpha_ent = entropy_coef();
  nn::Tape t;
  policy::Actor::Dist d = actor_.forward(t, next_obs, b, false);
  policy::Actor::Sample s = actor_.sample(t, d, b, rng_);
  const nn::Tensor& q1 = t.value(target1_.forward(t, next_obs, s.action, b, false));
  const nn::Tensor& q2 = t.value(target2_.forward(t, next_obs, s.action, b, false));
  const nn::Tensor& lp = t.value(s.log_prob);

  std::vector<float> y(static_cast<size_t>(b));
  for (int i = 0; i < b; ++i) {
    const Transition& tr = *batch[static_cast<size_t>(i)];
    float cont = cfg_.ablate_done_mask ? 1.0f : (tr.done ? 0.0f : 1.0f);
    float minq = std::min(q1.data[static_cast<size_t>(i)], q2.data[static_cast<size_t>(i)]);
    y[static_cast<size_t>(i)] =
        tr.reward + cont * cfg_.gamma * (minq - alpha_ent * lp.data[static_cast<size_t>(i)]);
  }
  return y;
}

void Trainer::check_finite(const char* loss_name, float v) const {
  if (!std::isfinite(v))
    throw std::runtime_error("non-finite " + std::string(loss_name) + " loss at update " +
                             std::to_string(update_count_));
}

UpdateLosses Trainer::update_step() {
  if (buffer_.size() < cfg_.batch_size)
    throw std::logic_error("update_step: buffer has " + std::to_string(buffer_.size()) +
                           " transitions, batch needs " + std::to_string(cfg_.batch_size));
  std::vector<int> idx = buffer_.sample_indices(cfg_.batch_size, rng_);
  nn::Tensor obs, act, next_obs;
  std::vector<float> reward;
  std::vector<bool> done;
  gather_batch(idx, obs, act, reward, done, next_obs);
  int b = cfg_.batch_size;

  std::vector<const Transition*> batch;
  batch.reserve(static_cast<size_t>(b));
  for (int i : idx) batch.push_back(&buffer_[i]);
  std::vector<float> y = critic_targets(batch);

  UpdateLosses losses;
  float alpha_ent = entropy_coef();

  {  // critics: MSE to the frozen targets
    nn::Tape t;
    nn::ValueId a = t.constant(act);
    nn::ValueId yv = t.constant(nn::Tensor({b, 1}, y));
    nn::ValueId l1 = t.mse(critic1_.forward(t, obs, a, b, true), yv);
    nn::ValueId l2 = t.mse(critic2_.forward(t, obs, a, b, true), yv);
    critic1_.params().zero_grad();
    critic2_.params().zero_grad();
    t.backward(t.add(l1, l2));
    losses.critic1 = t.value(l1).data[0];
    losses.critic2 = t.value(l2).data[0];
    check_finite("critic1", losses.critic1);
    check_finite("critic2", losses.critic2);
    opt_critic1_.step();
    opt_critic2_.step();
  }

  float mean_log_prob = 0.0f;
  {  // actor: maximize min-Q minus the entropy penalty, reparameterized
    nn::Tape t;
    policy::Actor::Dist d = actor_.forward(t, obs, b, true);
    policy::Actor::Sample s = actor_.sample(t, d, b, rng_);
    nn::ValueId q1 = critic1_.forward(t, obs, s.action, b, false);
    nn::ValueId q2 = critic2_.forward(t, obs, s.action, b, false);
    nn::ValueId loss =
        t.mean_all(t.sub(t.scale(s.log_prob, alpha_ent), t.min_(q1, q2)));
    actor_.params().zero_grad();
    critic1_.params().zero_grad();  // pass-through grads, discarded
    critic2_.params().zero_grad();
    t.backward(loss);
    losses.actor = t.value(loss).data[0];
    check_finite("actor", losses.actor);
    opt_actor_.step();
    const nn::Tensor& lp = t.value(s.log_prob);
    for (float v : lp.data) mean_log_prob += v;
    mean_log_prob /= static_cast<float>(b);
  }

  {  // entropy coefficient, optimized in log space on detached log-probs;
    // the target is stated for actions normalized to [-1, 1], while the
    // actor's log-prob is in physical units, off by the fixed log-scales
    nn::Parameter& la = alpha_set_.at("log_alpha");
    float norm = std::log(pcfg_.dx_scale) + std::log(pcfg_.df_scale);
    float err = mean_log_prob + norm + cfg_.entropy_target;
    losses.entropy = -la.value.data[0] * err;
    check_finite("entropy", losses.entropy);
    la.grad.data[0] = -err;
    opt_alpha_.step();
  }

  policy::polyak_update(critic1_.params(), target1_.params(), cfg_.tau_polyak);
  policy::polyak_update(critic2_.params(), target2_.params(), cfg_.tau_polyak);
  ++update_count_;
  return losses;
}

CheckpointGroups Trainer::checkpoint_groups() const {
  return {{"actor", &actor_.params()},     {"critic1", &critic1_.params()},
          {"critic2", &critic2_.params()}, {"target1", &target1_.params()},
          {"target2", &target2_.params()}, {"alpha", &alpha_set_}};
}

void Trainer::save(const std::string& path) const { save_checkpoint(checkpoint_groups(), path); }

void Trainer::load(const std::string& path) {
  load_group(path, "actor", actor_.params());
  load_group(path, "critic1", critic1_.params());
  load_group(path, "critic2", critic2_.params());
  load_group(path, "target1", target1_.params());
  load_group(path, "target2", target2_.params());
  load_group(path, "alpha", alpha_set_);
}

TrainResult Trainer::train(const std::string& out_dir) {
  cfg_.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string log_path = (fs::path(out_dir) / "training_log.csv").string();
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open training log: " + log_path);
  log << "env_step,episode,alpha,return,attempts,success,excess_force,actor_loss,"
         "critic_loss,entropy_coef\n";

  env::VectorEnv venv(cfg_.n_envs, eparams_, reward_, nn::hash64(seed_, 5));
  std::vector<nn::Tensor> obs = venv.reset();
  std::vector<float> returns(static_cast<size_t>(cfg_.n_envs), 0.0f);

  TrainResult result;
  UpdateLosses last{};
  double update_carry = 0.0;
  long long env_step = 0;
  long long next_checkpoint =
      cfg_.checkpoint_every > 0 ? cfg_.checkpoint_every : cfg_.total_env_steps + 1;
  char row[256];

  while (env_step < cfg_.total_env_steps) {
    std::vector<env::Action> actions(static_cast<size_t>(cfg_.n_envs));
    for (int i = 0; i < cfg_.n_envs; ++i) {
      if (env_step < cfg_.warmup_steps) {
        actions[static_cast<size_t>(i)] = {
            static_cast<float>(rng_.uniform(-eparams_.dx_max, eparams_.dx_max)),
            static_cast<float>(rng_.uniform(-eparams_.df_max, eparams_.df_max))};
      } else {
        actions[static_cast<size_t>(i)] = actor_.act(obs[static_cast<size_t>(i)], false, rng_);
      }
    }
    std::vector<env::VectorEnv::StepResult> res = venv.step(actions);

    for (int i = 0; i < cfg_.n_envs; ++i) {
      const env::StepOutcome& o = res[static_cast<size_t>(i)].outcome;
      Transition tr;
      tr.obs = obs[static_cast<size_t>(i)];
      tr.action = {actions[static_cast<size_t>(i)].dx, actions[static_cast<size_t>(i)].df};
      tr.reward = o.reward;
      tr.next_obs = o.observation;
      tr.done = o.terminal;
      buffer_.push(std::move(tr));
      returns[static_cast<size_t>(i)] += o.reward;
      ++env_step;

      if (res[static_cast<size_t>(i)].episode_end) {
        ++result.episodes;
        std::snprintf(row, sizeof row, "%lld,%d,%.9g,%.9g,%d,%d,%.9g,%.9g,%.9g,%.9g\n",
                      env_step, result.episodes, static_cast<double>(reward_.alpha),
                      static_cast<double>(returns[static_cast<size_t>(i)]), o.attempt_index,
                      o.terminal ? 1 : 0, static_cast<double>(o.delta_f),
                      static_cast<double>(last.actor),
                      static_cast<double>(0.5f * (last.critic1 + last.critic2)),
                      static_cast<double>(entropy_coef()));
        log << row;
        returns[static_cast<size_t>(i)] = 0.0f;
      }
      obs[static_cast<size_t>(i)] = res[static_cast<size_t>(i)].policy_obs;
    }

    if (env_step >= cfg_.warmup_steps && buffer_.size() >= cfg_.batch_size) {
      update_carry += cfg_.updates_per_env_step * cfg_.n_envs;
      while (update_carry >= 1.0) {
        last = update_step();
        ++result.updates;
        update_carry -= 1.0;
      }
    }
    if (env_step >= next_checkpoint) {
      save((fs::path(out_dir) / ("checkpoint_step" + std::to_string(env_step) + ".tgl"))
               .string());
      next_checkpoint += cfg_.checkpoint_every;
    }
  }

  result.env_steps = env_step;
  result.entropy_coef = entropy_coef();
  result.checkpoint_path = (fs::path(out_dir) / "checkpoint.tgl").string();
  result.log_path = log_path;
  save(result.checkpoint_path);
  log.flush();
  if (!log) throw std::runtime_error("write failure on training log: " + log_path);
  return result;
}

}  // namespace sg::sac
