#pragma once

#include <cstddef>
#include <vector>

#include "nashdqn/market.hpp"
#include "nashdqn/rng.hpp"

namespace nashdqn {

// Bounded FIFO of transitions; inserting into a full buffer evicts the
// oldest element. Backed by a ring so eviction is O(1).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition tr);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  // Oldest-first access, index 0 = oldest surviving element.
  const Transition& at(std::size_t i) const;
  const Transition& newest() const;

  // Uniform sample of min(count, size-1) distinct elements, excluding the
  // newest (which the training step appends separately).
  std::vector<const Transition*> sample_excluding_newest(std::size_t count,
                                                         Rng& rng) const;

 private:
  std::vector<Transition> data_;
  std::size_t capacity_ = 0;
  std::size_t head_ = 0;  // slot the next push writes to
  std::size_t size_ = 0;
};

}  // namespace nashdqn
