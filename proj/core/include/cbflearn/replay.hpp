#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cbflearn/rng.hpp"

namespace cbflearn {

struct Transition {
  std::vector<double> obs;
  std::vector<double> obs_next;
  std::array<double, 3> a_nominal{};
  std::array<double, 3> a_rectified{};
  double reward = 0.0;
  bool done = false;
  bool infeasible = false;
};

// FIFO ring with uniform batch sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  // Logical index: 0 is the oldest stored record.
  const Transition& at(std::size_t i) const;

  // k distinct logical indices. Throws if k exceeds the current size.
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::vector<Transition> ring_;
};

}  // namespace cbflearn
