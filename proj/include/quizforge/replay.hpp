#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quizforge/environment.hpp"
#include "quizforge/rng.hpp"

namespace quizforge {

// One stored transition; states are universe indices.
struct StoredTransition {
  QuizIndex state = 0;
  Action action = Action::kSimTopic;
  double reward = 0.0;
  QuizIndex next_state = 0;
  bool done = false;
};

// Binary tree over leaf priorities supporting prefix-sum search and a
// running minimum. Capacity is fixed at construction.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  void set(std::size_t leaf, double priority);
  double get(std::size_t leaf) const { return sum_[leaf + base_]; }
  double total() const { return sum_[1]; }
  // Smallest priority among leaves set so far (+inf when none).
  double min() const { return min_[1]; }
  // Leaf whose cumulative range contains `mass`, for mass in [0, total()).
  std::size_t find(double mass) const;
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> sum_;
  std::vector<double> min_;
};

struct ReplaySample {
  std::vector<std::size_t> slots;
  std::vector<StoredTransition> transitions;
  // Importance-sampling weights normalised so the largest is 1.
  std::vector<double> weights;
};

// Prioritised replay: P(i) proportional to (|td_i| + epsilon)^alpha.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double alpha, double epsilon);

  // New transitions enter with the largest priority seen so far.
  void add(const StoredTransition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return tree_.capacity(); }

  std::size_t sample_one(Rng& rng) const;
  // Stratified draw: the mass is split into `batch` equal segments and one
  // slot is drawn from each.
  ReplaySample sample(std::size_t batch, double beta, Rng& rng) const;
  void update_priorities(std::span<const std::size_t> slots, std::span<const double> td_errors);

  double priority(std::size_t slot) const { return tree_.get(slot); }
  double probability(std::size_t slot) const { return tree_.get(slot) / tree_.total(); }
  const StoredTransition& at(std::size_t slot) const { return data_.at(slot); }

 private:
  SumTree tree_;
  std::vector<StoredTransition> data_;
  double alpha_;
  double epsilon_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

}  // namespace quizforge
