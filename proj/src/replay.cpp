#include "quizforge/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quizforge/errors.hpp"

namespace quizforge {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  if (capacity == 0) {
    throw Error(ErrorKind::kInvalidArgument, "replay capacity must be positive");
  }
  while (base_ < capacity) {
    base_ <<= 1;
  }
  sum_.assign(2 * base_, 0.0);
  min_.assign(2 * base_, std::numeric_limits<double>::infinity());
}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= capacity_) {
    throw Error(ErrorKind::kInvalidArgument, "sum tree leaf out of range");
  }
  std::size_t i = leaf + base_;
  sum_[i] = priority;
  min_[i] = priority;
  for (i >>= 1; i >= 1; i >>= 1) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    min_[i] = std::min(min_[2 * i], min_[2 * i + 1]);
  }
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < base_) {
    const double left = sum_[2 * i];
    if (mass < left || sum_[2 * i + 1] <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  // Rounding can land on an empty leaf at the right edge; step back.
  std::size_t leaf = i - base_;
  while (leaf > 0 && sum_[leaf + base_] <= 0.0) {
    --leaf;
  }
  return leaf;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha, double epsilon)
    : tree_(capacity), data_(capacity), alpha_(alpha), epsilon_(epsilon) {
  if (alpha < 0.0 || !(epsilon > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "replay needs alpha >= 0 and epsilon > 0");
  }
}

void ReplayBuffer::add(const StoredTransition& t) {
  data_[next_] = t;
  tree_.set(next_, max_priority_);
  next_ = (next_ + 1) % capacity();
  size_ = std::min(size_ + 1, capacity());
}

std::size_t ReplayBuffer::sample_one(Rng& rng) const {
  if (size_ == 0) {
    throw Error(ErrorKind::kInvalidArgument, "sampling from an empty replay buffer");
  }
  return tree_.find(rng.uniform() * tree_.total());
}

ReplaySample ReplayBuffer::sample(std::size_t batch, double beta, Rng& rng) const {
  if (size_ == 0 || batch == 0) {
    throw Error(ErrorKind::kInvalidArgument, "sampling from an empty replay buffer");
  }
  ReplaySample out;
  out.slots.reserve(batch);
  out.transitions.reserve(batch);
  out.weights.reserve(batch);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch);
  const auto n = static_cast<double>(size_);
  // Largest weight belongs to the smallest priority.
  const double max_weight = std::pow(n * tree_.min() / total, -beta);
  for (std::size_t b = 0; b < batch; ++b) {
    const double mass = (static_cast<double>(b) + rng.uniform()) * segment;
    const std::size_t slot = tree_.find(std::min(mass, std::nextafter(total, 0.0)));
    out.slots.push_back(slot);
    out.transitions.push_back(data_[slot]);
    out.weights.push_back(std::pow(n * tree_.get(slot) / total, -beta) / max_weight);
  }
  return out;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> slots,
                                     std::span<const double> td_errors) {
  if (slots.size() != td_errors.size()) {
    throw Error(ErrorKind::kInvalidArgument, "priority update: size mismatch");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double p = std::pow(std::abs(td_errors[i]) + epsilon_, alpha_);
    tree_.set(slots[i], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

}  // namespace quizforge
