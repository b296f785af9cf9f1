#include <benchmark/benchmark.h>

#include "stablegrasp/bench/run_config.hpp"
#include "stablegrasp/env/env.hpp"
#include "stablegrasp/policy/actor_critic.hpp"
#include "stablegrasp/sim/world.hpp"

using namespace sg;

namespace {

nn::Tensor random_obs(int batch, uint64_t seed) {
  nn::Rng rng(seed);
  nn::Tensor obs({batch, env::kObsSize});
  for (auto& v : obs.data) v = 0.02f * rng.normal_f();
  return obs;
}

void BM_RunLift(benchmark::State& state) {
  sim::WorldConfig cfg;
  nn::Rng rng(7);
  for (auto _ : state) {
    sim::WorldState s;
    s.grasp_x = 0.12;
    s.grip_force = 1.5;
    s.load_pos = 0.16;
    benchmark::DoNotOptimize(sim::run_lift(s, cfg, rng));
  }
}
BENCHMARK(BM_RunLift);

void BM_EnvStep(benchmark::State& state) {
  bench::RunConfig cfg;
  env::GraspEnv e(cfg.env, cfg.reward, 11);
  e.reset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.step({0.002f, 0.01f}));
    if (!e.episode_active()) e.reset();
  }
}
BENCHMARK(BM_EnvStep);

void encoder_forward(benchmark::State& state, policy::Arch arch) {
  bench::RunConfig cfg;
  cfg.policy.arch = arch;
  policy::Actor actor(cfg.policy, 3);
  int batch = static_cast<int>(state.range(0));
  nn::Tensor obs = random_obs(batch, 5);
  for (auto _ : state) {
    nn::Tape t;
    benchmark::DoNotOptimize(actor.forward(t, obs, batch, false));
  }
}

void BM_TransformerForward(benchmark::State& state) {
  encoder_forward(state, policy::Arch::transformer);
}
BENCHMARK(BM_TransformerForward)->Arg(1)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CnnForward(benchmark::State& state) { encoder_forward(state, policy::Arch::cnn); }
BENCHMARK(BM_CnnForward)->Arg(1)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ActorBackward(benchmark::State& state) {
  bench::RunConfig cfg;
  policy::Actor actor(cfg.policy, 3);
  int batch = static_cast<int>(state.range(0));
  nn::Tensor obs = random_obs(batch, 5);
  nn::Rng rng(9);
  for (auto _ : state) {
    nn::Tape t;
    policy::Actor::Dist d = actor.forward(t, obs, batch, true);
    policy::Actor::Sample s = actor.sample(t, d, batch, rng);
    actor.params().zero_grad();
    t.backward(t.mean_all(s.log_prob));
  }
}
BENCHMARK(BM_ActorBackward)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
