#pragma once

#include <array>
#include <vector>

#include "stablegrasp/env/env.hpp"

namespace sg::sac {

/// One step of experience. `done` is true only for Eq.-1 terminal
/// success; truncated attempt-limit transitions store done = false so the
/// value target still bootstraps from next_obs.
struct Transition {
  nn::Tensor obs;
  std::array<float, env::kActionDim> action{};
  float reward = 0.0f;
  nn::Tensor next_obs;
  bool done = false;
};

/// Fixed-capacity ring buffer with uniform without-replacement batch
/// sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(Transition t);
  /// `batch` distinct uniform indices into [0, size).
  std::vector<int> sample_indices(int batch, nn::Rng& rng) const;

  const Transition& operator[](int i) const { return storage_[static_cast<size_t>(i)]; }
  int size() const { return static_cast<int>(storage_.size()); }
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  int head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> storage_;
};

}  // namespace sg::sac
