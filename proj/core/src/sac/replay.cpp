#include "stablegrasp/sac/replay.hpp"

#include <numeric>
#include <stdexcept>

namespace sg::sac {

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  storage_.reserve(static_cast<size_t>(capacity));
}

void ReplayBuffer::push(Transition t) {
  if (size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[static_cast<size_t>(head_)] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<int> ReplayBuffer::sample_indices(int batch, nn::Rng& rng) const {
  if (batch < 1 || batch > size())
    throw std::invalid_argument("ReplayBuffer: cannot sample " + std::to_string(batch) +
                                " of " + std::to_string(size()) + " transitions");
  // partial Fisher-Yates: first `batch` entries are a uniform
  // without-replacement draw
  std::vector<int> idx(static_cast<size_t>(size()));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < batch; ++i) {
    int j = i + rng.uniform_int(size() - i);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(batch));
  return idx;
}

}  // namespace sg::sac
