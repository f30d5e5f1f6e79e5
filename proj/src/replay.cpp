#include "nashdqn/replay.hpp"

#include <numeric>
#include <stdexcept>

namespace nashdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("capacity must be >= 1");
  data_.reserve(capacity);
}

void ReplayBuffer::push(Transition tr) {
  if (size_ < capacity_) {
    data_.push_back(std::move(tr));
    ++size_;
  } else {
    data_[head_] = std::move(tr);
  }
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  if (size_ < capacity_) return data_[i];
  return data_[(head_ + i) % capacity_];
}

const Transition& ReplayBuffer::newest() const {
  if (size_ == 0) throw std::out_of_range("ReplayBuffer::newest: empty");
  return at(size_ - 1);
}

std::vector<const Transition*> ReplayBuffer::sample_excluding_newest(
    std::size_t count, Rng& rng) const {
  if (size_ <= 1) return {};
  const std::size_t pool = size_ - 1;  // everything but the newest
  const std::size_t take = std::min(count, pool);
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Transition*> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t j = k + rng.bounded(pool - k);
    std::swap(idx[k], idx[j]);
    out.push_back(&at(idx[k]));
  }
  return out;
}

}  // namespace nashdqn
