#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "stablegrasp/sac/trainer.hpp"

using namespace sg;
namespace fs = std::filesystem;

namespace {

policy::PolicyConfig tiny_policy() {
  policy::PolicyConfig p;
  p.transformer.token_dim = 8;
  p.transformer.mlp_dim = 16;
  p.transformer.depth = 1;
  p.transformer.num_heads = 2;
  p.transformer.tok_channels = 4;
  p.head_hidden = 16;
  return p;
}

sac::TrainConfig tiny_train() {
  sac::TrainConfig t;
  t.batch_size = 2;
  t.buffer_capacity = 16;
  t.warmup_steps = 0;
  t.lr = 3e-3f;
  return t;
}

nn::Tensor random_obs(uint64_t seed) {
  nn::Rng rng(seed);
  nn::Tensor t({env::kObsT, env::kObsS, env::kObsF, env::kObsH, env::kObsW});
  for (auto& v : t.data) v = 0.02f * rng.normal_f();
  return t;
}

sac::Transition make_transition(uint64_t seed, float reward, bool done) {
  sac::Transition tr;
  tr.obs = random_obs(seed);
  tr.next_obs = random_obs(seed + 1000);
  tr.action = {0.002f, -0.05f};
  tr.reward = reward;
  tr.done = done;
  return tr;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct TmpDir {
  fs::path p;
  explicit TmpDir(const char* name) : p(fs::path("sac_test_tmp") / name) {
    fs::create_directories(p);
  }
  ~TmpDir() { fs::remove_all("sac_test_tmp"); }
  std::string file(const char* n) const { return (p / n).string(); }
};

}  // namespace

TEST_CASE("replay buffer ring semantics") {
  sac::ReplayBuffer buf(4);
  CHECK(buf.capacity() == 4);
  for (int i = 0; i < 6; ++i) buf.push(make_transition(static_cast<uint64_t>(i), static_cast<float>(i), false));
  CHECK(buf.size() == 4);
  // oldest two were overwritten: remaining rewards are {4, 5, 2, 3}
  std::multiset<float> rewards;
  for (int i = 0; i < buf.size(); ++i) rewards.insert(buf[i].reward);
  CHECK(rewards == std::multiset<float>{2.0f, 3.0f, 4.0f, 5.0f});
}

TEST_CASE("replay sampling is without replacement and uniform") {
  sac::ReplayBuffer buf(1000);
  for (int i = 0; i < 1000; ++i) buf.push(make_transition(1, 0.0f, false));
  nn::Rng rng(3);

  std::vector<int> counts(1000, 0);
  const int draws = 3000, batch = 33;
  for (int d = 0; d < draws; ++d) {
    std::vector<int> idx = buf.sample_indices(batch, rng);
    REQUIRE(static_cast<int>(idx.size()) == batch);
    std::set<int> uniq(idx.begin(), idx.end());
    CHECK(static_cast<int>(uniq.size()) == batch);  // distinct
    for (int i : idx) {
      REQUIRE(i >= 0);
      REQUIRE(i < 1000);
      ++counts[static_cast<size_t>(i)];
    }
  }
  double expect = static_cast<double>(draws) * batch / 1000.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 999 dof: mean 999, sd ~44.7; 1150 is well past the 0.1% tail
  CHECK(chi2 < 1150.0);

  CHECK_THROWS_AS(buf.sample_indices(1001, rng), std::invalid_argument);
}

TEST_CASE("train config validation") {
  sac::TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.gamma = 1.0f;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = sac::TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = sac::TrainConfig{};
  t.updates_per_env_step = -0.5;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves every value bitwise") {
  TmpDir tmp("roundtrip");
  nn::Rng rng(4);
  nn::ParameterSet a, b;
  a.add("w", nn::init_normal({3, 4}, 1.0f, rng));
  a.add("buf", nn::init_normal({2}, 1.0f, rng), false);
  b.add("v", nn::init_normal({5}, 1.0f, rng));
  std::string path = tmp.file("ckpt.tgl");
  sac::save_checkpoint({{"g1", &a}, {"g2", &b}}, path);

  CHECK(sac::checkpoint_groups(path) == std::vector<std::string>{"g1", "g2"});
  auto records = sac::read_checkpoint(path);
  REQUIRE(records.size() == 3);
  CHECK(records[0].first == "g1/w");
  CHECK(records[0].second.shape == std::vector<int>{3, 4});
  CHECK(records[0].second.data == a.at("w").value.data);
  CHECK(records[1].second.data == a.at("buf").value.data);
  CHECK(records[2].second.data == b.at("v").value.data);

  // load into zeroed clones
  nn::ParameterSet a2;
  a2.add("w", nn::Tensor::zeros({3, 4}));
  a2.add("buf", nn::Tensor::zeros({2}), false);
  sac::load_group(path, "g1", a2);
  CHECK(a2.at("w").value.data == a.at("w").value.data);
  CHECK(a2.at("buf").value.data == a.at("buf").value.data);

  // save -> load -> save is byte identical
  std::string path2 = tmp.file("ckpt2.tgl");
  sac::save_checkpoint({{"g1", &a2}}, path2);
  nn::ParameterSet a3;
  a3.add("w", nn::Tensor::zeros({3, 4}));
  a3.add("buf", nn::Tensor::zeros({2}), false);
  sac::load_group(path2, "g1", a3);
  std::string path3 = tmp.file("ckpt3.tgl");
  sac::save_checkpoint({{"g1", &a3}}, path3);
  CHECK(slurp(path2) == slurp(path3));
}

TEST_CASE("checkpoint rejects malformed files with named errors") {
  TmpDir tmp("malformed");
  nn::Rng rng(4);
  nn::ParameterSet a;
  a.add("w", nn::init_normal({2, 2}, 1.0f, rng));
  std::string good = tmp.file("good.tgl");
  sac::save_checkpoint({{"g", &a}}, good);

  SUBCASE("bad magic") {
    std::string bad = tmp.file("bad_magic.tgl");
    std::vector<char> bytes = slurp(good);
    bytes[0] = 'X';
    std::ofstream(bad, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_WITH_AS(sac::read_checkpoint(bad), doctest::Contains("magic"),
                         std::runtime_error);
  }
  SUBCASE("truncation") {
    std::string bad = tmp.file("trunc.tgl");
    std::vector<char> bytes = slurp(good);
    bytes.resize(bytes.size() - 5);
    std::ofstream(bad, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(sac::read_checkpoint(bad), std::runtime_error);
  }
  SUBCASE("unknown parameter in the destination set") {
    nn::ParameterSet other;
    other.add("not_w", nn::Tensor::zeros({2, 2}));
    CHECK_THROWS_WITH_AS(sac::load_group(good, "g", other), doctest::Contains("w"),
                         std::runtime_error);
  }
  SUBCASE("shape mismatch") {
    nn::ParameterSet other;
    other.add("w", nn::Tensor::zeros({4, 4}));
    CHECK_THROWS_WITH_AS(sac::load_group(good, "g", other), doctest::Contains("shape"),
                         std::runtime_error);
  }
  SUBCASE("missing group") {
    nn::ParameterSet other;
    other.add("w", nn::Tensor::zeros({2, 2}));
    CHECK_THROWS_AS(sac::load_group(good, "nope", other), std::runtime_error);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(sac::read_checkpoint(tmp.file("absent.tgl")), std::runtime_error); }
}

TEST_CASE("trainer construction: targets start equal to the online critics") {
  sac::Trainer tr(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tiny_train(), 5);
  for (size_t i = 0; i < tr.critic1().params().size(); ++i)
    CHECK(tr.critic1().params()[i].value.data == tr.target1().params()[i].value.data);
  for (size_t i = 0; i < tr.critic2().params().size(); ++i)
    CHECK(tr.critic2().params()[i].value.data == tr.target2().params()[i].value.data);
  CHECK(tr.entropy_coef() == 1.0f);
  CHECK_THROWS_AS(tr.update_step(), std::logic_error);  // empty buffer
}

TEST_CASE("terminal transitions bootstrap nothing; the ablation restores it") {
  sac::Trainer tr(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tiny_train(), 6);
  sac::Transition done_tr = make_transition(1, 2.5f, true);
  sac::Transition cont_tr = make_transition(2, -0.3f, false);
  std::vector<const sac::Transition*> batch = {&done_tr, &cont_tr};

  std::vector<float> y = tr.critic_targets(batch);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 2.5f);  // done: exactly the reward, no bootstrap term
  CHECK(y[1] != -0.3f);  // continuing: bootstraps from the target critics

  tr.config().ablate_done_mask = true;
  std::vector<float> ya = tr.critic_targets(batch);
  CHECK(ya[0] != 2.5f);  // the guard is what kept the bootstrap out
}

TEST_CASE("update steps move targets toward critics and tune alpha") {
  sac::Trainer tr(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tiny_train(), 7);
  for (int i = 0; i < 4; ++i)
    tr.buffer().push(make_transition(static_cast<uint64_t>(i), i % 2 ? 1.0f : -1.0f, i % 2 == 0));

  sac::UpdateLosses l = tr.update_step();
  CHECK(std::isfinite(l.critic1));
  CHECK(std::isfinite(l.actor));

  // after an update the critics moved but the targets only crept tau of
  // the way: target must now differ from both its old value (critic sync)
  // and the new critic
  bool target_between = false;
  for (size_t i = 0; i < tr.critic1().params().size() && !target_between; ++i) {
    const auto& c = tr.critic1().params()[i].value.data;
    const auto& t = tr.target1().params()[i].value.data;
    for (size_t j = 0; j < c.size(); ++j)
      if (c[j] != t[j]) target_between = true;
  }
  CHECK(target_between);
  CHECK(tr.entropy_coef() != 1.0f);
}

TEST_CASE("critics overfit a two-transition buffer to their exact returns") {
  sac::TrainConfig tc = tiny_train();
  sac::Trainer tr(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tc, 8);
  sac::Transition t1 = make_transition(11, 3.0f, true);
  sac::Transition t2 = make_transition(22, -1.0f, true);
  tr.buffer().push(t1);
  tr.buffer().push(t2);
  for (int i = 0; i < 400; ++i) tr.update_step();

  nn::Tape t;
  nn::Tensor obs({2, env::kObsSize});
  std::copy(t1.obs.data.begin(), t1.obs.data.end(), obs.data.begin());
  std::copy(t2.obs.data.begin(), t2.obs.data.end(), obs.data.begin() + env::kObsSize);
  nn::Tensor act({2, 2}, {t1.action[0], t1.action[1], t2.action[0], t2.action[1]});
  const nn::Tensor& q = t.value(tr.critic1().forward(t, obs, t.constant(act), 2, false));
  CHECK(std::abs(q.data[0] - 3.0f) < 0.4f);
  CHECK(std::abs(q.data[1] + 1.0f) < 0.4f);
}

TEST_CASE("trainer save/load round trip restores every group") {
  TmpDir tmp("trainer_ckpt");
  sac::Trainer tr(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tiny_train(), 9);
  for (int i = 0; i < 4; ++i) tr.buffer().push(make_transition(static_cast<uint64_t>(i), 0.5f, false));
  tr.update_step();
  std::string path = tmp.file("trainer.tgl");
  tr.save(path);

  sac::Trainer fresh(tiny_policy(), env::EnvParams{}, env::RewardConfig{}, tiny_train(), 77);
  fresh.load(path);
  for (size_t i = 0; i < tr.actor().params().size(); ++i)
    CHECK(fresh.actor().params()[i].value.data == tr.actor().params()[i].value.data);
  CHECK(fresh.entropy_coef() == tr.entropy_coef());

  std::string path2 = tmp.file("trainer2.tgl");
  fresh.save(path2);
  CHECK(slurp(path) == slurp(path2));
}
