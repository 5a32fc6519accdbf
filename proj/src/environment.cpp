#include "quizforge/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "quizforge/errors.hpp"

namespace quizforge {

namespace {

constexpr std::size_t kMaxQuizSize = 1000;
constexpr const char* kUniverseSchema = "quizforge.universe/1";

// C(n, k) >= target, evaluated without overflow.
bool binomial_at_least(std::size_t n, std::size_t k, std::size_t target) {
  if (k > n) {
    return target == 0;
  }
  k = std::min(k, n - k);
  long double c = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (c >= static_cast<long double>(target)) {
      return true;
    }
  }
  return c + 0.5L >= static_cast<long double>(target);
}

// Exact cosine ordering on integer count vectors. With the current quiz fixed,
// cos(i, a) > cos(i, b)  <=>  dot_a^2 * norm_b > dot_b^2 * norm_a.
struct CosKey {
  std::int64_t dot;
  std::int64_t norm_sq;
};

bool cos_greater(const CosKey& a, const CosKey& b) {
  return a.dot * a.dot * b.norm_sq > b.dot * b.dot * a.norm_sq;
}

}  // namespace

std::string_view to_string(Action action) {
  switch (action) {
    case Action::kSimTopic: return "SimTopic";
    case Action::kSimLevel: return "SimLevel";
    case Action::kDissTopic: return "DissTopic";
    case Action::kDissLevel: return "DissLevel";
  }
  return "?";
}

Action action_from_index(std::size_t index) {
  if (index >= kNumActions) {
    throw Error(ErrorKind::kInvalidArgument, "action index " + std::to_string(index));
  }
  return static_cast<Action>(index);
}

Universe Universe::build(const Dataset& pool, std::size_t k, std::size_t n, std::uint64_t seed) {
  if (k == 0 || k > kMaxQuizSize) {
    throw Error(ErrorKind::kInvalidArgument, "quiz size k must lie in [1, 1000]");
  }
  if (n == 0) {
    throw Error(ErrorKind::kInvalidArgument, "universe size must be positive");
  }
  const std::size_t m = pool.mcqs.size();
  if (!binomial_at_least(m, k, n)) {
    throw Error(ErrorKind::kInsufficientPool,
                "C(" + std::to_string(m) + ", " + std::to_string(k) + ") < " + std::to_string(n));
  }
  Rng rng(seed);
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  Universe u;
  u.k_ = k;
  u.n_topics_ = pool.n_topics();
  u.n_levels_ = pool.n_levels();
  u.quizzes_.reserve(n);
  std::vector<Mcq> members(k);
  while (u.quizzes_.size() < n) {
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + rng.uniform_index(m - i);
      std::swap(perm[i], perm[j]);
    }
    std::vector<std::size_t> pick(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(pick.begin(), pick.end());
    if (!seen.insert(pick).second) {
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      members[i] = pool.mcqs[pick[i]];
    }
    u.quizzes_.push_back(quiz_from_mcqs(members, k, u.n_topics_, u.n_levels_));
  }
  u.index_quizzes();
  u.build_candidates();
  return u;
}

Universe Universe::from_quizzes(std::vector<Quiz> quizzes, std::size_t k) {
  if (quizzes.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "universe needs at least one quiz");
  }
  if (k == 0 || k > kMaxQuizSize) {
    throw Error(ErrorKind::kInvalidArgument, "quiz size k must lie in [1, 1000]");
  }
  Universe u;
  u.k_ = k;
  u.n_topics_ = quizzes.front().topic_vec.size();
  u.n_levels_ = quizzes.front().diff_vec.size();
  std::set<std::vector<McqId>> seen;
  for (const Quiz& q : quizzes) {
    if (q.mcq_ids.size() != k) {
      throw Error(ErrorKind::kSizeMismatch, "every quiz must have exactly k members");
    }
    if (q.topic_vec.size() != u.n_topics_ || q.diff_vec.size() != u.n_levels_) {
      throw Error(ErrorKind::kDimensionMismatch, "quiz vectors disagree in length");
    }
    std::vector<McqId> ids = q.mcq_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw Error(ErrorKind::kDuplicateMcq, "quiz repeats an mcq id");
    }
    if (!seen.insert(ids).second) {
      throw Error(ErrorKind::kInvalidArgument, "universe contains the same quiz twice");
    }
  }
  u.quizzes_ = std::move(quizzes);
  u.index_quizzes();
  u.build_candidates();
  return u;
}

void Universe::index_quizzes() {
  const std::size_t n = quizzes_.size();
  const std::size_t dim = state_dim();
  const auto kd = static_cast<double>(k_);
  states_.assign(n * dim, 0.0);
  topic_counts_.assign(n * n_topics_, 0);
  level_counts_.assign(n * n_levels_, 0);
  topic_norm_sq_.assign(n, 0);
  level_norm_sq_.assign(n, 0);
  auto to_count = [&](double p) {
    double c = std::round(p * kd);
    if (!(p >= 0.0) || std::abs(c - p * kd) > 1e-6) {
      throw Error(ErrorKind::kInvalidArgument, "quiz vector entry is not a multiple of 1/k");
    }
    return static_cast<std::uint16_t>(c);
  };
  for (std::size_t i = 0; i < n; ++i) {
    Quiz& q = quizzes_[i];
    std::sort(q.mcq_ids.begin(), q.mcq_ids.end());
    std::size_t tsum = 0;
    std::size_t lsum = 0;
    for (std::size_t t = 0; t < n_topics_; ++t) {
      auto c = to_count(q.topic_vec[t]);
      topic_counts_[i * n_topics_ + t] = c;
      topic_norm_sq_[i] += static_cast<std::int64_t>(c) * c;
      tsum += c;
      states_[i * dim + t] = q.topic_vec[t];
    }
    for (std::size_t l = 0; l < n_levels_; ++l) {
      auto c = to_count(q.diff_vec[l]);
      level_counts_[i * n_levels_ + l] = c;
      level_norm_sq_[i] += static_cast<std::int64_t>(c) * c;
      lsum += c;
      states_[i * dim + n_topics_ + l] = q.diff_vec[l];
    }
    if (tsum != k_ || lsum != k_) {
      throw Error(ErrorKind::kInvalidArgument,
                  "quiz " + std::to_string(i) + " vectors do not account for k members");
    }
  }
}

std::vector<QuizIndex> Universe::rank_candidates(std::size_t current, Action action) const {
  const std::size_t n = quizzes_.size();
  const bool by_topic = action == Action::kSimTopic || action == Action::kDissTopic;
  const bool similar = is_similarity_action(action);
  const auto ti = topic_counts(current);
  const auto li = level_counts(current);
  const std::int64_t full_i = topic_norm_sq_[current] + level_norm_sq_[current];

  struct Entry {
    CosKey key;
    QuizIndex index;
  };
  std::vector<Entry> pool;
  pool.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == current) {
      continue;
    }
    std::int64_t dt = 0;
    std::int64_t dl = 0;
    const auto tj = topic_counts(j);
    const auto lj = level_counts(j);
    for (std::size_t t = 0; t < n_topics_; ++t) {
      dt += static_cast<std::int64_t>(ti[t]) * tj[t];
    }
    for (std::size_t l = 0; l < n_levels_; ++l) {
      dl += static_cast<std::int64_t>(li[l]) * lj[l];
    }
    // cos_full > 0.95  <=>  400 (dt + dl)^2 > 361 |s_i|^2 |s_j|^2
    const std::int64_t full_j = topic_norm_sq_[j] + level_norm_sq_[j];
    if (400 * (dt + dl) * (dt + dl) > 361 * full_i * full_j) {
      continue;
    }
    CosKey key = by_topic ? CosKey{dt, topic_norm_sq_[j]} : CosKey{dl, level_norm_sq_[j]};
    pool.push_back({key, static_cast<QuizIndex>(j)});
  }
  auto before = [similar](const Entry& a, const Entry& b) {
    if (cos_greater(a.key, b.key)) {
      return similar;
    }
    if (cos_greater(b.key, a.key)) {
      return !similar;
    }
    return a.index < b.index;
  };
  const std::size_t take = std::min(kCandidatePoolSize, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                    before);
  std::vector<QuizIndex> out(take);
  for (std::size_t i = 0; i < take; ++i) {
    out[i] = pool[i].index;
  }
  return out;
}

void Universe::build_candidates() {
  const std::size_t n = quizzes_.size();
  candidate_slots_.assign(n * kNumActions * kCandidatePoolSize, 0);
  candidate_counts_.assign(n * kNumActions, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (Action a : kAllActions) {
      auto ranked = rank_candidates(i, a);
      const std::size_t slot = i * kNumActions + index_of(a);
      std::copy(ranked.begin(), ranked.end(),
                candidate_slots_.begin() + static_cast<std::ptrdiff_t>(slot * kCandidatePoolSize));
      candidate_counts_[slot] = static_cast<std::uint8_t>(ranked.size());
    }
  }
}

std::span<const QuizIndex> Universe::candidates(std::size_t current, Action action) const {
  if (current >= quizzes_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "quiz index " + std::to_string(current) +
                                                 " outside a universe of " +
                                                 std::to_string(quizzes_.size()));
  }
  const std::size_t slot = current * kNumActions + index_of(action);
  return {candidate_slots_.data() + slot * kCandidatePoolSize, candidate_counts_[slot]};
}

void Universe::save(std::ostream& out) const {
  nlohmann::json header = {{"schema", kUniverseSchema},
                           {"k", k_},
                           {"n_topics", n_topics_},
                           {"n_levels", n_levels_},
                           {"size", quizzes_.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < quizzes_.size(); ++i) {
    const Quiz& q = quizzes_[i];
    nlohmann::json row = {{"index", i},
                          {"mcq_ids", q.mcq_ids},
                          {"topic_vec", q.topic_vec},
                          {"diff_vec", q.diff_vec}};
    out << row.dump() << '\n';
  }
}

void Universe::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write universe " + path.string());
  }
  save(out);
}

Universe Universe::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kParseError, "universe file is empty");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("universe header: ") + e.what());
  }
  if (header.value("schema", "") != kUniverseSchema) {
    throw Error(ErrorKind::kParseError, "not a universe file (schema mismatch)");
  }
  const auto k = header.at("k").get<std::size_t>();
  const auto size = header.at("size").get<std::size_t>();
  std::vector<Quiz> quizzes;
  quizzes.reserve(size);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      auto row = nlohmann::json::parse(line);
      if (row.at("index").get<std::size_t>() != quizzes.size()) {
        throw Error(ErrorKind::kParseError, "quiz rows out of order");
      }
      Quiz q;
      q.mcq_ids = row.at("mcq_ids").get<std::vector<McqId>>();
      q.topic_vec = row.at("topic_vec").get<std::vector<double>>();
      q.diff_vec = row.at("diff_vec").get<std::vector<double>>();
      quizzes.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError,
                  "universe line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (quizzes.size() != size) {
    throw Error(ErrorKind::kParseError, "universe header announces " + std::to_string(size) +
                                            " quizzes, file holds " +
                                            std::to_string(quizzes.size()));
  }
  return from_quizzes(std::move(quizzes), k);
}

Universe Universe::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open universe " + path.string());
  }
  return load(in);
}

std::span<const QuizIndex> candidates(const Universe& u, std::size_t current, Action action) {
  auto c = u.candidates(current, action);
  if (c.empty()) {
    throw Error(ErrorKind::kNoCandidates, std::string(to_string(action)) + " from quiz " +
                                              std::to_string(current) + " has no candidates");
  }
  return c;
}

std::string to_string(RewardScheme scheme) { return scheme == RewardScheme::kR1 ? "R1" : "R2"; }

RewardScheme parse_reward_scheme(const std::string& text) {
  if (text == "R1" || text == "r1") {
    return RewardScheme::kR1;
  }
  if (text == "R2" || text == "r2") {
    return RewardScheme::kR2;
  }
  throw Error(ErrorKind::kInvalidArgument, "reward scheme must be R1 or R2, got '" + text + "'");
}

void EpisodeConfig::validate() const {
  if (max_steps == 0) {
    throw Error(ErrorKind::kInvalidArgument, "max_steps must be at least 1");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "beta must lie in (0, 1]");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "gamma must lie in [0, 1]");
  }
}

double reward_for(RewardScheme scheme, double match_before, double match_after) {
  return scheme == RewardScheme::kR2 ? match_after - match_before : match_after;
}

StepRecord step(const Universe& u, std::size_t current, Action action, const TargetSpec& spec,
                const EpisodeConfig& cfg, Rng& rng) {
  auto pool = candidates(u, current, action);
  const QuizIndex dest = pool[rng.uniform_index(pool.size())];
  StepRecord rec;
  rec.from = static_cast<QuizIndex>(current);
  rec.action = action;
  rec.to = dest;
  rec.match_before = target_match(u.quiz(current), spec);
  rec.match_after = target_match(u.quiz(dest), spec);
  rec.reward = reward_for(cfg.reward, rec.match_before, rec.match_after);
  return rec;
}

StepRecord step_or_stall(const Universe& u, std::size_t current, Action action,
                         const TargetSpec& spec, const EpisodeConfig& cfg, Rng& rng) {
  if (!u.candidates(current, action).empty()) {
    return step(u, current, action, spec, cfg, rng);
  }
  StepRecord rec;
  rec.from = static_cast<QuizIndex>(current);
  rec.action = action;
  rec.to = rec.from;
  rec.match_before = target_match(u.quiz(current), spec);
  rec.match_after = rec.match_before;
  rec.reward = 0.0;
  rec.stalled = true;
  return rec;
}

EpisodeResult run_episode(const Universe& u, std::size_t start, const PolicyFn& policy,
                          const TargetSpec& spec, const EpisodeConfig& cfg, Rng& rng) {
  if (start >= u.size()) {
    throw Error(ErrorKind::kInvalidArgument, "start index outside the universe");
  }
  EpisodeResult res;
  res.start = static_cast<QuizIndex>(start);
  res.initial_match = target_match(u.quiz(start), spec);
  res.final_match = res.initial_match;
  if (res.initial_match >= cfg.beta) {
    res.success = true;
    return res;
  }
  std::size_t current = start;
  for (std::size_t t = 0; t < cfg.max_steps; ++t) {
    StepRecord rec = step_or_stall(u, current, policy(u, current, rng), spec, cfg, rng);
    res.stalls += rec.stalled ? 1 : 0;
    res.trace.push_back(rec);
    current = rec.to;
    res.final_match = rec.match_after;
    if (rec.match_after >= cfg.beta) {
      res.success = true;
      break;
    }
  }
  return res;
}

double session_match(std::span<const StepRecord> trace, double gamma) {
  double total = 0.0;
  double weight = 1.0;
  for (const StepRecord& r : trace) {
    weight *= gamma;
    total += weight * (r.match_after - r.match_before);
  }
  return total;
}

std::vector<double> match_table(const Universe& u, const TargetSpec& spec) {
  std::vector<double> m(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    m[i] = target_match(u.quiz(i), spec);
  }
  return m;
}

}  // namespace quizforge
