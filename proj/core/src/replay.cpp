#include "cbflearn/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace cbflearn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  ring_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(t));
  } else {
    ring_[head_] = std::move(t);
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer: index past size");
  if (size_ < capacity_) return ring_[i];
  return ring_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, Rng& rng) const {
  if (k > size_) throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
  // Floyd's selection: k distinct indices in [0, size).
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t j = size_ - k; j < size_; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  return picked;
}

}  // namespace cbflearn
