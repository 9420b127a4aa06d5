#pragma once

#include <cstddef>
#include <vector>

#include "moesac/env.hpp"
#include "moesac/errors.hpp"
#include "moesac/rng.hpp"

namespace moesac {

// Fixed-capacity FIFO ring of transitions; sampling is uniform with
// replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("buffer_capacity: must be >= 1");
    storage_.reserve(capacity_);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }

  const Transition& operator[](std::size_t i) const {
    const std::size_t start = storage_.size() < capacity_ ? 0 : head_;
    return storage_[(start + i) % storage_.size()];
  }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[head_] = std::move(t);  // overwrite the oldest entry
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::vector<std::size_t> sample_indices(std::size_t batch,
                                          SeededRng& rng) const {
    if (size() < batch)
      throw NotEnoughData("sample: buffer holds fewer transitions than batch");
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i)
      idx[i] = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(size()) - 1));
    return idx;
  }

  std::vector<Transition> sample(std::size_t batch, SeededRng& rng) const {
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i : sample_indices(batch, rng)) out.push_back((*this)[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest entry once the ring is full
  std::vector<Transition> storage_;
};

}  // namespace moesac
