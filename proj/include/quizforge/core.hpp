#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace quizforge {

using McqId = std::int64_t;

// Free-text payload of a question. Carried through for export only.
struct McqText {
  std::string question;
  std::string choice_a;
  std::string choice_b;
  std::string choice_c;
  std::string choice_d;
  std::string answer;

  bool empty() const {
    return question.empty() && choice_a.empty() && choice_b.empty() && choice_c.empty() &&
           choice_d.empty() && answer.empty();
  }
};

struct Mcq {
  McqId id = 0;
  std::size_t topic = 0;
  std::size_t level = 0;
  McqText text;
};

// A k-subset of MCQs with its topic and difficulty proportion vectors.
// Member ids are kept sorted ascending.
struct Quiz {
  std::vector<McqId> mcq_ids;
  std::vector<double> topic_vec;
  std::vector<double> diff_vec;

  std::size_t size() const { return mcq_ids.size(); }
};

struct TargetSpec {
  std::vector<double> tc;
  std::vector<double> td;
  double alpha = 0.5;
  double beta = 0.85;

  // Throws Error(kInvalidArgument) when a proportion vector does not sum to 1,
  // has a negative entry, or alpha/beta are out of range.
  void validate() const;
};

inline constexpr double kProportionTolerance = 1e-9;

// dot(a, b) / (|a| |b|). Throws ZeroVector if either side is all zeros and
// InvalidArgument on a length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Builds the proportion vectors from exactly k members.
Quiz quiz_from_mcqs(std::span<const Mcq> members, std::size_t k, std::size_t n_topics,
                    std::size_t n_levels);

double topic_match(const Quiz& quiz, std::span<const double> tc);
double diff_match(const Quiz& quiz, std::span<const double> td);
// alpha * topic_match + (1 - alpha) * diff_match.
double target_match(const Quiz& quiz, const TargetSpec& spec);

// Shared helpers for vectors that must be probability distributions.
bool is_distribution(std::span<const double> v, double tol = kProportionTolerance);
std::vector<double> uniform_distribution(std::size_t n);

}  // namespace quizforge
