#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "quizforge/core.hpp"
#include "quizforge/errors.hpp"
#include "quizforge/rng.hpp"

namespace qf = quizforge;

namespace {

std::vector<qf::Mcq> members(const std::vector<std::pair<std::size_t, std::size_t>>& labels) {
  std::vector<qf::Mcq> out;
  qf::McqId id = 0;
  for (auto [t, l] : labels) {
    out.push_back({id++, t, l, {}});
  }
  return out;
}

// Written out long-hand so it does not share code with the library.
double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST(Cosine, IdenticalVectorsGiveOne) {
  EXPECT_DOUBLE_EQ(qf::cosine_similarity(std::vector{0.5, 0.5}, std::vector{0.5, 0.5}), 1.0);
}

TEST(Cosine, OrthogonalVectorsGiveZero) {
  EXPECT_DOUBLE_EQ(qf::cosine_similarity(std::vector{1.0, 0.0}, std::vector{0.0, 1.0}), 0.0);
}

TEST(Cosine, TwoHotAgainstUniform) {
  std::vector<double> a(10, 0.0);
  a[0] = a[1] = 0.5;
  const std::vector<double> u(10, 0.1);
  // dot = 0.1, |a| = sqrt(0.5), |u| = sqrt(0.1)
  const double expected = 0.1 / (std::sqrt(0.5) * std::sqrt(0.1));
  EXPECT_NEAR(qf::cosine_similarity(a, u), expected, 1e-15);
  EXPECT_NEAR(qf::cosine_similarity(a, u), 0.4472, 5e-5);
}

TEST(Cosine, ZeroVectorIsAnError) {
  try {
    qf::cosine_similarity(std::vector{0.0, 0.0}, std::vector{1.0, 0.0});
    FAIL();
  } catch (const qf::Error& e) {
    EXPECT_EQ(e.kind(), qf::ErrorKind::kZeroVector);
  }
}

TEST(Cosine, LengthMismatchIsRejected) {
  EXPECT_THROW(qf::cosine_similarity(std::vector{1.0}, std::vector{1.0, 0.0}), qf::Error);
}

TEST(Cosine, SymmetricScaleInvariantAndSelfOne) {
  qf::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    const double ab = qf::cosine_similarity(a, b);
    EXPECT_NEAR(ab, naive_cosine(a, b), 1e-12);
    EXPECT_NEAR(ab, qf::cosine_similarity(b, a), 1e-15);
    EXPECT_NEAR(qf::cosine_similarity(a, a), 1.0, 1e-15);
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= 3.7;
    EXPECT_NEAR(qf::cosine_similarity(scaled, b), ab, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(QuizFromMcqs, TwoTopicsHalfEach) {
  std::vector<std::pair<std::size_t, std::size_t>> labels;
  for (int i = 0; i < 5; ++i) labels.push_back({0, 0});
  for (int i = 0; i < 5; ++i) labels.push_back({1, 0});
  const auto q = qf::quiz_from_mcqs(members(labels), 10, 10, 5);
  std::vector<double> expected(10, 0.0);
  expected[0] = expected[1] = 0.5;
  EXPECT_EQ(q.topic_vec, expected);
}

TEST(QuizFromMcqs, AllSameLevel) {
  std::vector<std::pair<std::size_t, std::size_t>> labels(10, {3, 2});
  const auto q = qf::quiz_from_mcqs(members(labels), 10, 10, 5);
  EXPECT_EQ(q.diff_vec, (std::vector<double>{0, 0, 1, 0, 0}));
}

TEST(QuizFromMcqs, PairOverTwoTopics) {
  const auto q = qf::quiz_from_mcqs(members({{0, 0}, {1, 0}}), 2, 2, 1);
  EXPECT_EQ(q.topic_vec, (std::vector<double>{0.5, 0.5}));
}

TEST(QuizFromMcqs, SizeMismatchAndDuplicates) {
  try {
    qf::quiz_from_mcqs(members({{0, 0}, {1, 0}}), 3, 2, 1);
    FAIL();
  } catch (const qf::Error& e) {
    EXPECT_EQ(e.kind(), qf::ErrorKind::kSizeMismatch);
  }
  auto dup = members({{0, 0}, {1, 0}});
  dup[1].id = dup[0].id;
  try {
    qf::quiz_from_mcqs(dup, 2, 2, 1);
    FAIL();
  } catch (const qf::Error& e) {
    EXPECT_EQ(e.kind(), qf::ErrorKind::kDuplicateMcq);
  }
}

TEST(QuizFromMcqs, VectorsAreDistributions) {
  qf::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::size_t, std::size_t>> labels;
    for (int i = 0; i < 7; ++i) labels.push_back({rng.uniform_index(4), rng.uniform_index(3)});
    const auto q = qf::quiz_from_mcqs(members(labels), 7, 4, 3);
    EXPECT_TRUE(qf::is_distribution(q.topic_vec));
    EXPECT_TRUE(qf::is_distribution(q.diff_vec));
    EXPECT_EQ(q.mcq_ids.size(), 7u);
  }
}

TEST(Match, TopicMatchExamples) {
  qf::Quiz q;
  q.topic_vec = std::vector<double>(10, 0.0);
  q.topic_vec[0] = q.topic_vec[1] = 0.5;
  q.diff_vec = {1, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(qf::topic_match(q, q.topic_vec), 1.0);
  EXPECT_NEAR(qf::topic_match(q, std::vector<double>(10, 0.1)), 0.4472, 5e-5);

  qf::Quiz biased = q;
  biased.topic_vec.assign(10, 0.0);
  biased.topic_vec[5] = biased.topic_vec[8] = 0.5;
  EXPECT_DOUBLE_EQ(qf::topic_match(biased, biased.topic_vec), 1.0);
}

TEST(Match, DiffMatchExamples) {
  qf::Quiz q;
  q.topic_vec = {1.0};
  q.diff_vec = {1, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(qf::diff_match(q, q.diff_vec), 1.0);
  // dot = 0.2, norms 1 and sqrt(0.2)
  EXPECT_NEAR(qf::diff_match(q, std::vector<double>(5, 0.2)), 0.2 / std::sqrt(0.2), 1e-15);
  q.diff_vec = {0.5, 0, 0, 0, 0.5};
  EXPECT_DOUBLE_EQ(qf::diff_match(q, std::vector<double>{0.5, 0, 0, 0, 0.5}), 1.0);
}

TEST(Match, TargetMatchWeighting) {
  qf::Quiz q;
  q.topic_vec.assign(10, 0.0);
  q.topic_vec[0] = q.topic_vec[1] = 0.5;
  q.diff_vec = {0.2, 0.2, 0.2, 0.2, 0.2};
  qf::TargetSpec spec{std::vector<double>(10, 0.1), std::vector<double>(5, 0.2), 1.0, 0.85};
  EXPECT_EQ(qf::target_match(q, spec), qf::topic_match(q, spec.tc));
  spec.alpha = 0.0;
  EXPECT_EQ(qf::target_match(q, spec), qf::diff_match(q, spec.td));
  spec.alpha = 0.5;
  const double tm = 0.1 / (std::sqrt(0.5) * std::sqrt(0.1));
  EXPECT_NEAR(qf::target_match(q, spec), 0.5 * tm + 0.5 * 1.0, 1e-15);
  EXPECT_NEAR(qf::target_match(q, spec), 0.7236, 5e-5);
}

TEST(Match, BoundedAndMonotoneInTopic) {
  qf::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::size_t, std::size_t>> a, b;
    for (int i = 0; i < 10; ++i) a.push_back({rng.uniform_index(10), rng.uniform_index(5)});
    for (int i = 0; i < 10; ++i) b.push_back({rng.uniform_index(10), a[i].second});
    const auto qa = qf::quiz_from_mcqs(members(a), 10, 10, 5);
    const auto qb = qf::quiz_from_mcqs(members(b), 10, 10, 5);
    qf::TargetSpec spec{qf::uniform_distribution(10), qf::uniform_distribution(5), rng.uniform(),
                        0.85};
    const double ma = qf::target_match(qa, spec);
    EXPECT_GE(ma, 0.0);
    EXPECT_LE(ma, 1.0);
    // Same difficulty vector: ordering follows topic match.
    if (qf::topic_match(qa, spec.tc) < qf::topic_match(qb, spec.tc)) {
      EXPECT_LE(ma, qf::target_match(qb, spec));
    }
  }
}

TEST(TargetSpec, ValidationRejectsBadInputs) {
  qf::TargetSpec ok{qf::uniform_distribution(3), qf::uniform_distribution(2), 0.5, 0.85};
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.tc = {0.5, 0.5, 0.5};
  EXPECT_THROW(bad.validate(), qf::Error);
  bad = ok;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), qf::Error);
  bad = ok;
  bad.beta = 0.0;
  EXPECT_THROW(bad.validate(), qf::Error);
}
