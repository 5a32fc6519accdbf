#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "quizforge/core.hpp"
#include "quizforge/environment.hpp"
#include "quizforge/network.hpp"
#include "quizforge/rng.hpp"

namespace quizforge {

enum class Algorithm { kDqn, kSarsa, kA2c, kA3c };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& text);
HeadKind head_for(Algorithm algo);

struct TrainConfig {
  std::size_t episodes = 5000;
  std::size_t max_steps = 100;
  double gamma = 0.95;
  // Learning rate.
  double eta = 0.005;
  std::size_t batch_size = 128;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.05;
  // DQN: copy online -> target every this many gradient updates.
  std::size_t target_sync_interval = 500;
  std::size_t replay_capacity = 50000;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  double per_epsilon = 1e-6;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  std::size_t workers = 1;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::vector<std::size_t> hidden = {64, 64};
  RewardScheme reward = RewardScheme::kR2;
  std::size_t probe_states = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

// Episode semantics for a training/inference run; beta comes from the target.
EpisodeConfig episode_config(const TrainConfig& cfg, const TargetSpec& spec);

// epsilon after `episodes` completed episodes.
double epsilon_after(const TrainConfig& cfg, std::size_t episodes);

// A transition whose states are plain vectors (views).
struct Experience {
  std::span<const double> state;
  Action action = Action::kSimTopic;
  double reward = 0.0;
  std::span<const double> next_state;
  bool done = false;
  // Importance-sampling weight applied to this sample's loss.
  double weight = 1.0;
};

struct UpdateResult {
  // Target minus prediction, per sample.
  std::vector<double> td_errors;
  double loss = 0.0;
};

// r + gamma * max_a' Q_target(s', a'), or r when done.
double dqn_target(const ParamSet& target, const Experience& e, double gamma);
// Regresses Q(s, a) toward dqn_target with loss mean_i w_i * (Q - y)^2 / 2.
UpdateResult dqn_update(ParamSet& params, const ParamSet& target, std::span<const Experience> batch,
                        double gamma, Optimizer& opt);

// r + gamma * Q(s', a'), or r when done.
double sarsa_target(const ParamSet& params, const Experience& e, Action next_action, double gamma);
UpdateResult sarsa_update(ParamSet& params, const Experience& e, Action next_action, double gamma,
                          Optimizer& opt);

struct ActorCriticTerms {
  double entropy_coef = 0.01;
  double value_coef = 0.5;
};

// Gradient of the summed actor-critic loss over the rollout:
//   -log pi(a|s) * A  +  value_coef * (r + gamma V(s') - V(s))^2  -  entropy_coef * H(pi(.|s))
// with A = r + gamma V(s') - V(s) held constant. Returns the advantages.
std::vector<double> a2c_gradient(const ParamSet& params, std::span<const Experience> rollout,
                                 double gamma, const ActorCriticTerms& terms,
                                 std::span<double> grad);
UpdateResult a2c_update(ParamSet& params, std::span<const Experience> rollout, double gamma,
                        const ActorCriticTerms& terms, Optimizer& opt);

// Greedy action under a parameter set: argmax Q, or argmax pi for actor-critic
// heads. Ties go to the lowest action index.
Action greedy_action(const ParamSet& params, std::span<const double> state);

enum class PolicyMode { kEpsilonGreedy, kGreedy, kStochastic };

// Behaviour/inference policy over a parameter snapshot.
struct Policy {
  PolicyMode mode = PolicyMode::kGreedy;
  double epsilon = 0.0;
  const ParamSet* params = nullptr;

  Action choose(std::span<const double> state, Rng& rng) const;
  // Probability of each action in `state`.
  std::array<double, kNumActions> probabilities(std::span<const double> state) const;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double epsilon = 0.0;
  std::size_t steps = 0;
  bool success = false;
  double initial_match = 0.0;
  double terminal_match = 0.0;
  double total_reward = 0.0;
  std::array<std::size_t, kNumActions> action_counts{};
  // Mean over the probe states of max_a Q(s, a) (or V(s) for actor-critic).
  double max_q = 0.0;
  std::size_t stalls = 0;
  std::size_t updates = 0;
};

struct TrainLog {
  Algorithm algorithm = Algorithm::kDqn;
  std::vector<EpisodeLog> episodes;
  // Parameter versions produced by every applied update, in completion order.
  std::vector<std::uint64_t> versions;

  std::size_t total_steps() const;
};

struct TrainResult {
  ParamSet params;
  TrainLog log;
};

// Probe set for the max-Q metric: `count` quiz indices drawn once per run.
std::vector<QuizIndex> probe_indices(const Universe& u, std::size_t count, std::uint64_t seed);
double probe_value(const ParamSet& params, const Universe& u, std::span<const QuizIndex> probes);

TrainResult train_dqn(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg);
TrainResult train_sarsa(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg);
TrainResult train_a2c(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg);
// cfg.workers asynchronous workers sharing one parameter set (Hogwild).
// Throws WorkerPanic if a worker fails.
TrainResult a3c_train(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg);

TrainResult train_agent(Algorithm algo, const Universe& u, const TargetSpec& spec,
                        const TrainConfig& cfg);

struct InferenceResult {
  EpisodeResult episode;
  QuizIndex final_index = 0;
  double final_match = 0.0;
  std::size_t iterations = 0;
  double elapsed_sec = 0.0;
};

// Greedy rollout from `start`; candidate sampling uses `seed`.
InferenceResult infer_quiz(const ParamSet& params, const Universe& u, const TargetSpec& spec,
                           const EpisodeConfig& cfg, std::size_t start, std::uint64_t seed);

}  // namespace quizforge
