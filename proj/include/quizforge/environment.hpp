#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quizforge/core.hpp"
#include "quizforge/datagen.hpp"
#include "quizforge/rng.hpp"

namespace quizforge {

enum class Action : std::uint8_t {
  kSimTopic = 0,
  kSimLevel = 1,
  kDissTopic = 2,
  kDissLevel = 3,
};

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kSimTopic, Action::kSimLevel, Action::kDissTopic, Action::kDissLevel};

std::string_view to_string(Action action);
Action action_from_index(std::size_t index);
inline std::size_t index_of(Action action) { return static_cast<std::size_t>(action); }
inline bool is_similarity_action(Action a) { return a == Action::kSimTopic || a == Action::kSimLevel; }

// Number of neighbours an action samples from.
inline constexpr std::size_t kCandidatePoolSize = 25;
// Destinations whose full-state cosine to the current quiz exceeds this are
// treated as near-duplicates and never offered.
inline constexpr double kNearDuplicateCosine = 0.95;

using QuizIndex = std::uint32_t;

// The materialized set of candidate quizzes. Immutable once built; the
// per-action candidate lists are computed eagerly and shared by all episodes.
class Universe {
 public:
  // Samples n distinct k-subsets of the pool uniformly (rejecting duplicates).
  // Throws InsufficientPool when C(|pool|, k) < n.
  static Universe build(const Dataset& pool, std::size_t k, std::size_t n, std::uint64_t seed);
  // Wraps explicit quizzes (all of size k). Vectors must be count proportions.
  static Universe from_quizzes(std::vector<Quiz> quizzes, std::size_t k);

  std::size_t size() const { return quizzes_.size(); }
  std::size_t k() const { return k_; }
  std::size_t n_topics() const { return n_topics_; }
  std::size_t n_levels() const { return n_levels_; }
  std::size_t state_dim() const { return n_topics_ + n_levels_; }

  const Quiz& quiz(std::size_t i) const { return quizzes_.at(i); }
  const std::vector<Quiz>& quizzes() const { return quizzes_; }
  // topic_vec ++ diff_vec.
  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * state_dim(), state_dim()};
  }
  std::span<const std::uint16_t> topic_counts(std::size_t i) const {
    return {topic_counts_.data() + i * n_topics_, n_topics_};
  }
  std::span<const std::uint16_t> level_counts(std::size_t i) const {
    return {level_counts_.data() + i * n_levels_, n_levels_};
  }

  // Up to kCandidatePoolSize destinations for `action` from quiz `current`,
  // in ranking order. May be empty.
  std::span<const QuizIndex> candidates(std::size_t current, Action action) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Universe load(std::istream& in);
  static Universe load(const std::filesystem::path& path);

 private:
  Universe() = default;
  void index_quizzes();
  void build_candidates();
  std::vector<QuizIndex> rank_candidates(std::size_t current, Action action) const;

  std::size_t k_ = 0;
  std::size_t n_topics_ = 0;
  std::size_t n_levels_ = 0;
  std::vector<Quiz> quizzes_;
  std::vector<double> states_;
  std::vector<std::uint16_t> topic_counts_;
  std::vector<std::uint16_t> level_counts_;
  std::vector<std::int64_t> topic_norm_sq_;
  std::vector<std::int64_t> level_norm_sq_;
  // [quiz][action][slot]
  std::vector<QuizIndex> candidate_slots_;
  std::vector<std::uint8_t> candidate_counts_;
};

// Candidates with an error on an empty result.
std::span<const QuizIndex> candidates(const Universe& u, std::size_t current, Action action);

enum class RewardScheme { kR1, kR2 };

std::string to_string(RewardScheme scheme);
RewardScheme parse_reward_scheme(const std::string& text);

struct EpisodeConfig {
  std::size_t max_steps = 100;
  double beta = 0.85;
  RewardScheme reward = RewardScheme::kR2;
  double gamma = 0.95;

  void validate() const;
};

struct StepRecord {
  QuizIndex from = 0;
  Action action = Action::kSimTopic;
  QuizIndex to = 0;
  double reward = 0.0;
  double match_before = 0.0;
  double match_after = 0.0;
  // The action had no candidates; recorded as a zero-reward self-transition.
  bool stalled = false;
};

// R2: match(dest) - match(current); R1: match(dest).
double reward_for(RewardScheme scheme, double match_before, double match_after);

// Samples the destination uniformly among the candidates. Throws NoCandidates.
StepRecord step(const Universe& u, std::size_t current, Action action, const TargetSpec& spec,
                const EpisodeConfig& cfg, Rng& rng);
// Same as step() but turns NoCandidates into a stalled self-transition.
StepRecord step_or_stall(const Universe& u, std::size_t current, Action action,
                         const TargetSpec& spec, const EpisodeConfig& cfg, Rng& rng);

using PolicyFn = std::function<Action(const Universe&, std::size_t current, Rng&)>;

struct EpisodeResult {
  QuizIndex start = 0;
  std::vector<StepRecord> trace;
  bool success = false;
  double initial_match = 0.0;
  double final_match = 0.0;
  std::size_t stalls = 0;

  QuizIndex final_index() const { return trace.empty() ? start : trace.back().to; }
};

// Runs until target_match >= cfg.beta (success) or cfg.max_steps steps.
EpisodeResult run_episode(const Universe& u, std::size_t start, const PolicyFn& policy,
                          const TargetSpec& spec, const EpisodeConfig& cfg, Rng& rng);

// sum_i gamma^i (match_after_i - match_before_i), with the first step weighted gamma^1.
double session_match(std::span<const StepRecord> trace, double gamma);

// target_match for every quiz of the universe.
std::vector<double> match_table(const Universe& u, const TargetSpec& spec);

}  // namespace quizforge
