#include "quizforge/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "quizforge/errors.hpp"

namespace quizforge {

void TargetSpec::validate() const {
  if (tc.empty() || !is_distribution(tc)) {
    throw Error(ErrorKind::kInvalidArgument, "target topic vector must be a distribution");
  }
  if (td.empty() || !is_distribution(td)) {
    throw Error(ErrorKind::kInvalidArgument, "target difficulty vector must be a distribution");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "beta must lie in (0, 1]");
  }
}

bool is_distribution(std::span<const double> v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      return false;
    }
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::vector<double> uniform_distribution(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kInvalidArgument, "cosine_similarity: length mismatch (" +
                                                 std::to_string(a.size()) + " vs " +
                                                 std::to_string(b.size()) + ")");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::kZeroVector, "cosine_similarity of an all-zero vector");
  }
  // Rounding can push identical directions a hair above 1.
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Quiz quiz_from_mcqs(std::span<const Mcq> members, std::size_t k, std::size_t n_topics,
                    std::size_t n_levels) {
  if (members.size() != k) {
    throw Error(ErrorKind::kSizeMismatch, "quiz needs " + std::to_string(k) + " members, got " +
                                              std::to_string(members.size()));
  }
  Quiz quiz;
  quiz.topic_vec.assign(n_topics, 0.0);
  quiz.diff_vec.assign(n_levels, 0.0);
  quiz.mcq_ids.reserve(k);
  std::vector<std::size_t> topic_counts(n_topics, 0);
  std::vector<std::size_t> level_counts(n_levels, 0);
  for (const Mcq& m : members) {
    if (m.topic >= n_topics || m.level >= n_levels) {
      throw Error(ErrorKind::kInvalidArgument,
                  "mcq " + std::to_string(m.id) + " has a topic or level index out of range");
    }
    ++topic_counts[m.topic];
    ++level_counts[m.level];
    quiz.mcq_ids.push_back(m.id);
  }
  std::sort(quiz.mcq_ids.begin(), quiz.mcq_ids.end());
  auto dup = std::adjacent_find(quiz.mcq_ids.begin(), quiz.mcq_ids.end());
  if (dup != quiz.mcq_ids.end()) {
    throw Error(ErrorKind::kDuplicateMcq, "mcq " + std::to_string(*dup) + " appears twice");
  }
  const auto kd = static_cast<double>(k);
  for (std::size_t t = 0; t < n_topics; ++t) {
    quiz.topic_vec[t] = static_cast<double>(topic_counts[t]) / kd;
  }
  for (std::size_t l = 0; l < n_levels; ++l) {
    quiz.diff_vec[l] = static_cast<double>(level_counts[l]) / kd;
  }
  return quiz;
}

double topic_match(const Quiz& quiz, std::span<const double> tc) {
  return cosine_similarity(quiz.topic_vec, tc);
}

double diff_match(const Quiz& quiz, std::span<const double> td) {
  return cosine_similarity(quiz.diff_vec, td);
}

double target_match(const Quiz& quiz, const TargetSpec& spec) {
  // Skip the unused objective so alpha in {0, 1} collapses exactly.
  if (spec.alpha == 1.0) {
    return topic_match(quiz, spec.tc);
  }
  if (spec.alpha == 0.0) {
    return diff_match(quiz, spec.td);
  }
  return spec.alpha * topic_match(quiz, spec.tc) + (1.0 - spec.alpha) * diff_match(quiz, spec.td);
}

}  // namespace quizforge
