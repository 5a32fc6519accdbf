#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "quizforge/datagen.hpp"
#include "quizforge/environment.hpp"
#include "quizforge/errors.hpp"
#include "support.hpp"

namespace qf = quizforge;

namespace {

qf::Dataset pool(std::size_t n, std::uint64_t seed, std::size_t topics = 10, std::size_t levels = 5) {
  qf::DatasetSpec spec;
  spec.n_mcqs = n;
  spec.n_topics = topics;
  spec.n_levels = levels;
  spec.draw = qf::DirichletDraw::kPerMcq;
  spec.seed = seed;
  return qf::generate_synthetic(spec);
}

qf::TargetSpec uniform_target(double alpha) {
  return {qf::uniform_distribution(10), qf::uniform_distribution(5), alpha, 0.85};
}

qf::Quiz quiz_with(const std::vector<std::size_t>& topics, const std::vector<std::size_t>& levels,
                   qf::McqId first_id) {
  std::vector<qf::Mcq> ms;
  for (std::size_t i = 0; i < topics.size(); ++i) {
    ms.push_back({first_id + static_cast<qf::McqId>(i), topics[i], levels[i], {}});
  }
  return qf::quiz_from_mcqs(ms, topics.size(), 4, 3);
}

}  // namespace

TEST(Universe, SmallPoolFeasibility) {
  const auto ds = pool(12, 1);
  const auto u = qf::Universe::build(ds, 10, 5, 3);
  ASSERT_EQ(u.size(), 5u);
  std::set<std::vector<qf::McqId>> sets;
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_EQ(u.quiz(i).mcq_ids.size(), 10u);
    sets.insert(u.quiz(i).mcq_ids);
  }
  EXPECT_EQ(sets.size(), 5u);
}

TEST(Universe, InsufficientPool) {
  const auto ds = pool(12, 1);
  EXPECT_NO_THROW(qf::Universe::build(ds, 10, 66, 3));
  try {
    qf::Universe::build(ds, 10, 67, 3);
    FAIL();
  } catch (const qf::Error& e) {
    EXPECT_EQ(e.kind(), qf::ErrorKind::kInsufficientPool);
  }
}

TEST(Universe, FullScaleAndStateLayout) {
  const auto ds = pool(1500, 2);
  const auto u = qf::Universe::build(ds, 10, 10000, 9);
  ASSERT_EQ(u.size(), 10000u);
  EXPECT_EQ(u.state_dim(), 15u);
  for (std::size_t i = 0; i < u.size(); i += 97) {
    const auto s = u.state(i);
    const auto& q = u.quiz(i);
    ASSERT_EQ(s.size(), 15u);
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(s[t], q.topic_vec[t]);
    for (std::size_t l = 0; l < 5; ++l) EXPECT_EQ(s[10 + l], q.diff_vec[l]);
    EXPECT_NEAR(std::accumulate(s.begin(), s.begin() + 10, 0.0), 1.0, 1e-9);
    EXPECT_NEAR(std::accumulate(s.begin() + 10, s.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Universe, SameSeedSameUniverse) {
  const auto ds = pool(200, 4);
  const auto a = qf::Universe::build(ds, 10, 300, 21);
  const auto b = qf::Universe::build(ds, 10, 300, 21);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.quiz(i).mcq_ids, b.quiz(i).mcq_ids);
    for (auto act : qf::kAllActions) {
      const auto ca = a.candidates(i, act);
      const auto cb = b.candidates(i, act);
      EXPECT_TRUE(std::equal(ca.begin(), ca.end(), cb.begin(), cb.end()));
    }
  }
}

TEST(Universe, SaveLoadRoundTrip) {
  const auto ds = pool(100, 6);
  const auto u = qf::Universe::build(ds, 10, 50, 2);
  std::stringstream buf;
  u.save(buf);
  const auto v = qf::Universe::load(buf);
  ASSERT_EQ(v.size(), u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_EQ(v.quiz(i).mcq_ids, u.quiz(i).mcq_ids);
    EXPECT_EQ(v.quiz(i).topic_vec, u.quiz(i).topic_vec);
    for (auto act : qf::kAllActions) {
      const auto ca = u.candidates(i, act);
      const auto cb = v.candidates(i, act);
      EXPECT_TRUE(std::equal(ca.begin(), ca.end(), cb.begin(), cb.end()));
    }
  }
}

TEST(Candidates, ThreeQuizUniverseHasAtMostTwo) {
  const auto ds = pool(30, 8);
  const auto u = qf::Universe::build(ds, 10, 3, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    for (auto act : qf::kAllActions) {
      const auto c = u.candidates(i, act);
      EXPECT_LE(c.size(), 2u);
      for (auto j : c) EXPECT_NE(j, i);
    }
  }
}

TEST(Candidates, NearDuplicateNeverOffered) {
  // Quizzes 0 and 1 differ only in one member with the same labels: full
  // cosine 1.0. Quiz 2 is far away.
  std::vector<qf::Quiz> qs = {
      quiz_with({0, 0, 1, 1}, {0, 1, 2, 0}, 0),
      quiz_with({0, 0, 1, 1}, {0, 1, 2, 0}, 10),
      quiz_with({2, 2, 3, 3}, {1, 1, 1, 1}, 20),
  };
  const auto u = qf::Universe::from_quizzes(qs, 4);
  for (auto act : qf::kAllActions) {
    for (auto j : u.candidates(0, act)) EXPECT_NE(j, 1u);
    for (auto j : u.candidates(1, act)) EXPECT_NE(j, 0u);
  }
  EXPECT_EQ(u.candidates(0, qf::Action::kSimTopic).size(), 1u);
}

TEST(Candidates, MatchBruteForceOnTinyUniverses) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto ds = pool(40, seed, 4, 3);
    const auto u = qf::Universe::build(ds, 5, 5 + 15 * seed, seed + 100);
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (auto act : qf::kAllActions) {
        const auto got = u.candidates(i, act);
        const auto want = qf_test::brute_force_candidates(u, i, act);
        EXPECT_EQ(std::vector<qf::QuizIndex>(got.begin(), got.end()), want)
            << "seed " << seed << " quiz " << i << " action " << qf::to_string(act);
      }
    }
  }
}

TEST(Candidates, SimOrderingDominatesExcluded) {
  const auto ds = pool(60, 3);
  const auto u = qf::Universe::build(ds, 10, 100, 7);
  for (std::size_t i = 0; i < u.size(); i += 7) {
    const auto c = u.candidates(i, qf::Action::kSimTopic);
    std::set<qf::QuizIndex> chosen(c.begin(), c.end());
    double worst = 2.0;
    for (auto j : c) worst = std::min(worst, qf_test::cosine(u.quiz(i).topic_vec, u.quiz(j).topic_vec));
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (j == i || chosen.count(static_cast<qf::QuizIndex>(j))) continue;
      const double full = qf_test::cosine(
          std::vector<double>(u.state(i).begin(), u.state(i).end()),
          std::vector<double>(u.state(j).begin(), u.state(j).end()));
      if (full > 0.95 + 1e-12) continue;
      EXPECT_LE(qf_test::cosine(u.quiz(i).topic_vec, u.quiz(j).topic_vec), worst + 1e-12);
    }
  }
}

TEST(Candidates, EmptyListIsNoCandidates) {
  std::vector<qf::Quiz> qs = {quiz_with({0, 1}, {0, 1}, 0), quiz_with({0, 1}, {0, 1}, 5)};
  const auto u = qf::Universe::from_quizzes(qs, 2);
  try {
    qf::candidates(u, 0, qf::Action::kDissLevel);
    FAIL();
  } catch (const qf::Error& e) {
    EXPECT_EQ(e.kind(), qf::ErrorKind::kNoCandidates);
  }
  qf::TargetSpec spec{qf::uniform_distribution(4), qf::uniform_distribution(3), 0.5, 0.85};
  qf::Rng rng(1);
  EXPECT_THROW(qf::step(u, 0, qf::Action::kSimTopic, spec, {}, rng), qf::Error);
  const auto rec = qf::step_or_stall(u, 0, qf::Action::kSimTopic, spec, {}, rng);
  EXPECT_TRUE(rec.stalled);
  EXPECT_EQ(rec.to, 0u);
  EXPECT_EQ(rec.reward, 0.0);
}

TEST(Reward, Definitions) {
  EXPECT_NEAR(qf::reward_for(qf::RewardScheme::kR2, 0.6, 0.7), 0.1, 1e-15);
  EXPECT_EQ(qf::reward_for(qf::RewardScheme::kR1, 0.6, 0.7), 0.7);
}

TEST(Step, RewardsAndNoSelfLoops) {
  const auto ds = pool(300, 5);
  const auto u = qf::Universe::build(ds, 10, 500, 1);
  const auto spec = uniform_target(0.5);
  qf::Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t cur = rng.uniform_index(u.size());
    const auto act = qf::action_from_index(rng.uniform_index(4));
    qf::EpisodeConfig r2;
    const auto rec = qf::step(u, cur, act, spec, r2, rng);
    EXPECT_NE(rec.to, rec.from);
    const auto c = u.candidates(cur, act);
    EXPECT_NE(std::find(c.begin(), c.end(), rec.to), c.end());
    EXPECT_EQ(rec.match_after, qf::target_match(u.quiz(rec.to), spec));
    EXPECT_NEAR(rec.reward, rec.match_after - rec.match_before, 1e-12);
    qf::EpisodeConfig r1;
    r1.reward = qf::RewardScheme::kR1;
    const auto rec1 = qf::step(u, cur, act, spec, r1, rng);
    EXPECT_EQ(rec1.reward, rec1.match_after);
  }
}

TEST(Step, UniformOverCandidates) {
  const auto ds = pool(300, 5);
  const auto u = qf::Universe::build(ds, 10, 500, 1);
  const auto spec = uniform_target(0.5);
  qf::Rng rng(3);
  const auto c = u.candidates(0, qf::Action::kSimLevel);
  ASSERT_EQ(c.size(), 25u);
  std::map<qf::QuizIndex, int> hits;
  const int draws = 25000;
  for (int i = 0; i < draws; ++i) ++hits[qf::step(u, 0, qf::Action::kSimLevel, spec, {}, rng).to];
  double chi2 = 0;
  for (auto j : c) chi2 += std::pow(hits[j] - draws / 25.0, 2) / (draws / 25.0);
  EXPECT_LT(chi2, 51.2);  // chi-square(24) upper 0.1% point
}

TEST(Episode, ImmediateSuccess) {
  const auto ds = pool(300, 5);
  const auto u = qf::Universe::build(ds, 10, 200, 1);
  const auto spec = uniform_target(0.0);
  const auto table = qf::match_table(u, spec);
  const std::size_t best = std::max_element(table.begin(), table.end()) - table.begin();
  qf::EpisodeConfig cfg;
  cfg.beta = table[best];
  qf::Rng rng(1);
  const auto res = qf::run_episode(
      u, best, [](const qf::Universe&, std::size_t, qf::Rng&) { return qf::Action::kSimTopic; },
      spec, cfg, rng);
  EXPECT_TRUE(res.success);
  EXPECT_TRUE(res.trace.empty());
  EXPECT_EQ(res.final_index(), best);
}

TEST(Episode, UnreachableThresholdRunsMaxSteps) {
  const auto ds = pool(40, 5);
  const auto u = qf::Universe::build(ds, 10, 10, 1);
  qf::EpisodeConfig cfg;
  cfg.beta = 1.01;
  cfg.max_steps = 37;
  qf::Rng rng(4);
  const qf::PolicyFn random = [](const qf::Universe&, std::size_t, qf::Rng& r) {
    return qf::action_from_index(r.uniform_index(4));
  };
  const auto res = qf::run_episode(u, 0, random, uniform_target(0.5), cfg, rng);
  EXPECT_EQ(res.trace.size(), 37u);
  EXPECT_FALSE(res.success);
}

TEST(Episode, UndiscountedReturnTelescopes) {
  const auto ds = pool(300, 5);
  const auto u = qf::Universe::build(ds, 10, 400, 1);
  qf::Rng rng(9);
  const qf::PolicyFn random = [](const qf::Universe&, std::size_t, qf::Rng& r) {
    return qf::action_from_index(r.uniform_index(4));
  };
  for (int ep = 0; ep < 50; ++ep) {
    qf::EpisodeConfig cfg;
    cfg.gamma = 1.0;
    cfg.beta = 0.9 + 0.1 * rng.uniform();
    const auto spec = uniform_target(rng.uniform());
    const auto res = qf::run_episode(u, rng.uniform_index(u.size()), random, spec, cfg, rng);
    double sum = 0;
    for (const auto& s : res.trace) sum += s.reward;
    EXPECT_NEAR(sum, res.final_match - res.initial_match, 1e-9);
    EXPECT_NEAR(qf::session_match(res.trace, 1.0), res.final_match - res.initial_match, 1e-9);
    EXPECT_LE(res.trace.size(), cfg.max_steps);
    if (res.success) {
      EXPECT_GE(res.final_match, cfg.beta);
    }
  }
}

TEST(SessionMatch, Conventions) {
  EXPECT_EQ(qf::session_match({}, 0.95), 0.0);
  std::vector<qf::StepRecord> trace(2);
  trace[0].match_before = 0.5;
  trace[0].match_after = 0.6;
  trace[1].match_before = 0.6;
  trace[1].match_after = 0.65;
  // First step weighted by gamma^1.
  EXPECT_NEAR(qf::session_match(trace, 0.95), 0.95 * 0.1 + 0.9025 * 0.05, 1e-12);
  EXPECT_NEAR(qf::session_match(trace, 0.95), 0.140125, 1e-12);
}

TEST(Actions, StableEncoding) {
  EXPECT_EQ(qf::index_of(qf::Action::kSimTopic), 0u);
  EXPECT_EQ(qf::index_of(qf::Action::kSimLevel), 1u);
  EXPECT_EQ(qf::index_of(qf::Action::kDissTopic), 2u);
  EXPECT_EQ(qf::index_of(qf::Action::kDissLevel), 3u);
  EXPECT_THROW(qf::action_from_index(4), qf::Error);
}
