#include "quizforge/agents.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include "quizforge/errors.hpp"
#include "quizforge/replay.hpp"

namespace quizforge {

namespace {

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) {
      best = i;
    }
  }
  return best;
}

double max_of(std::span<const double> v) { return v[argmax(v)]; }

void require_head(const ParamSet& params, HeadKind head, const char* what) {
  if (params.spec.head != head) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + ": wrong network head");
  }
}

void check_loss(double loss, const char* what, std::size_t sample, double prediction,
                double target) {
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << what << ": non-finite loss at sample " << sample << " (prediction " << prediction
        << ", target " << target << ")";
    throw Error(ErrorKind::kNonFiniteLoss, msg.str());
  }
}

NetworkSpec network_for(const Universe& u, const TrainConfig& cfg, HeadKind head) {
  NetworkSpec spec;
  spec.input_dim = u.state_dim();
  spec.hidden = cfg.hidden;
  spec.head = head;
  spec.n_actions = kNumActions;
  return spec;
}

ParamSet initial_params(const Universe& u, const TrainConfig& cfg, Algorithm algo) {
  Rng rng(derive_seed(cfg.seed, "init"));
  ParamSet p = init_params(network_for(u, cfg, head_for(algo)), rng);
  p.tag = to_string(algo);
  return p;
}

std::uint64_t episode_seed(const TrainConfig& cfg, std::size_t episode) {
  return derive_seed(cfg.seed, "episode", episode);
}

// Shared bookkeeping for one environment step.
void record_step(EpisodeLog& log, const StepRecord& rec) {
  ++log.steps;
  ++log.action_counts[index_of(rec.action)];
  log.total_reward += rec.reward;
  log.terminal_match = rec.match_after;
  if (rec.stalled) {
    ++log.stalls;
  }
}

EpisodeLog start_log(std::size_t episode, double epsilon, double initial_match) {
  EpisodeLog log;
  log.episode = episode;
  log.epsilon = epsilon;
  log.initial_match = initial_match;
  log.terminal_match = initial_match;
  return log;
}

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kDqn:
      return "dqn";
    case Algorithm::kSarsa:
      return "sarsa";
    case Algorithm::kA2c:
      return "a2c";
    case Algorithm::kA3c:
      return "a3c";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "dqn") return Algorithm::kDqn;
  if (t == "sarsa") return Algorithm::kSarsa;
  if (t == "a2c") return Algorithm::kA2c;
  if (t == "a3c") return Algorithm::kA3c;
  throw Error(ErrorKind::kConfig, "unknown algorithm '" + text + "'");
}

HeadKind head_for(Algorithm algo) {
  return (algo == Algorithm::kA2c || algo == Algorithm::kA3c) ? HeadKind::kActorCritic
                                                               : HeadKind::kQ;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  if (episodes == 0) fail("episodes must be positive");
  if (max_steps == 0) fail("max_steps must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must lie in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) fail("epsilon_decay must lie in (0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= 1.0)) fail("epsilon_min must lie in [0, 1]");
  if (target_sync_interval == 0) fail("target_sync_interval must be positive");
  if (replay_capacity == 0) fail("replay_capacity must be positive");
  if (!(per_alpha >= 0.0)) fail("per_alpha must be non-negative");
  if (!(per_beta_start >= 0.0 && per_beta_start <= 1.0)) fail("per_beta_start must lie in [0, 1]");
  if (!(per_epsilon > 0.0)) fail("per_epsilon must be positive");
  if (!(entropy_coef >= 0.0)) fail("entropy_coef must be non-negative");
  if (!(value_coef >= 0.0)) fail("value_coef must be non-negative");
  if (workers == 0) fail("workers must be positive");
  if (probe_states == 0) fail("probe_states must be positive");
  for (std::size_t w : hidden) {
    if (w == 0) fail("hidden layer widths must be positive");
  }
}

EpisodeConfig episode_config(const TrainConfig& cfg, const TargetSpec& spec) {
  EpisodeConfig e;
  e.max_steps = cfg.max_steps;
  e.beta = spec.beta;
  e.reward = cfg.reward;
  e.gamma = cfg.gamma;
  return e;
}

double epsilon_after(const TrainConfig& cfg, std::size_t episodes) {
  const double e = cfg.epsilon_start * std::pow(cfg.epsilon_decay, static_cast<double>(episodes));
  return std::max(cfg.epsilon_min, e);
}

double dqn_target(const ParamSet& target, const Experience& e, double gamma) {
  if (e.done) {
    return e.reward;
  }
  const HeadOutput next = forward(target, e.next_state);
  return e.reward + gamma * max_of(next.q());
}

UpdateResult dqn_update(ParamSet& params, const ParamSet& target, std::span<const Experience> batch,
                        double gamma, Optimizer& opt) {
  require_head(params, HeadKind::kQ, "dqn_update");
  if (batch.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "dqn_update: empty batch");
  }
  UpdateResult res;
  res.td_errors.reserve(batch.size());
  std::vector<double> grad(params.values.size(), 0.0);
  std::vector<double> out_grad(params.spec.output_dim(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = batch[i];
    const ForwardPass pass = forward_pass(params, e.state);
    const std::size_t a = index_of(e.action);
    const double q = pass.out.raw[a];
    const double y = dqn_target(target, e, gamma);
    const double diff = q - y;
    const double loss_i = e.weight * diff * diff * 0.5;
    check_loss(loss_i, "dqn_update", i, q, y);
    res.loss += loss_i * inv_b;
    res.td_errors.push_back(y - q);
    std::fill(out_grad.begin(), out_grad.end(), 0.0);
    out_grad[a] = e.weight * diff * inv_b;
    backward_from(params, pass, out_grad, grad);
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorKind::kNonFiniteGradient, "dqn_update: gradient contains NaN or inf");
    }
  }
  opt.step(params, grad);
  return res;
}

double sarsa_target(const ParamSet& params, const Experience& e, Action next_action, double gamma) {
  if (e.done) {
    return e.reward;
  }
  const HeadOutput next = forward(params, e.next_state);
  return e.reward + gamma * next.raw[index_of(next_action)];
}

UpdateResult sarsa_update(ParamSet& params, const Experience& e, Action next_action, double gamma,
                          Optimizer& opt) {
  require_head(params, HeadKind::kQ, "sarsa_update");
  const double y = sarsa_target(params, e, next_action, gamma);
  const ForwardPass pass = forward_pass(params, e.state);
  const std::size_t a = index_of(e.action);
  const double q = pass.out.raw[a];
  const double diff = q - y;
  UpdateResult res;
  res.loss = e.weight * diff * diff * 0.5;
  check_loss(res.loss, "sarsa_update", 0, q, y);
  res.td_errors.push_back(y - q);
  std::vector<double> out_grad(params.spec.output_dim(), 0.0);
  out_grad[a] = e.weight * diff;
  std::vector<double> grad(params.values.size(), 0.0);
  backward_from(params, pass, out_grad, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorKind::kNonFiniteGradient, "sarsa_update: gradient contains NaN or inf");
    }
  }
  opt.step(params, grad);
  return res;
}

std::vector<double> a2c_gradient(const ParamSet& params, std::span<const Experience> rollout,
                                 double gamma, const ActorCriticTerms& terms,
                                 std::span<double> grad) {
  require_head(params, HeadKind::kActorCritic, "a2c_gradient");
  const std::size_t na = params.spec.n_actions;
  std::vector<double> advantages;
  advantages.reserve(rollout.size());
  std::vector<double> out_grad(params.spec.output_dim(), 0.0);
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    const Experience& e = rollout[i];
    const ForwardPass pass = forward_pass(params, e.state);
    const double v = pass.out.value;
    const double v_next = e.done ? 0.0 : forward(params, e.next_state).value;
    const double adv = e.reward + gamma * v_next - v;
    if (!std::isfinite(adv)) {
      check_loss(adv, "a2c_gradient", i, v, e.reward + gamma * v_next);
    }
    advantages.push_back(adv);
    const std::vector<double>& pi = pass.out.probs;
    double entropy = 0.0;
    for (double p : pi) {
      if (p > 0.0) {
        entropy -= p * std::log(p);
      }
    }
    const std::size_t a = index_of(e.action);
    for (std::size_t j = 0; j < na; ++j) {
      const double policy = -adv * ((j == a ? 1.0 : 0.0) - pi[j]);
      const double ent = pi[j] > 0.0 ? terms.entropy_coef * pi[j] * (std::log(pi[j]) + entropy) : 0.0;
      out_grad[j] = e.weight * (policy + ent);
    }
    out_grad[na] = e.weight * (-2.0 * terms.value_coef * adv);
    backward_from(params, pass, out_grad, grad);
  }
  return advantages;
}

UpdateResult a2c_update(ParamSet& params, std::span<const Experience> rollout, double gamma,
                        const ActorCriticTerms& terms, Optimizer& opt) {
  std::vector<double> grad(params.values.size(), 0.0);
  UpdateResult res;
  res.td_errors = a2c_gradient(params, rollout, gamma, terms, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorKind::kNonFiniteGradient, "a2c_update: gradient contains NaN or inf");
    }
  }
  for (double adv : res.td_errors) {
    res.loss += terms.value_coef * adv * adv;
  }
  opt.step(params, grad);
  return res;
}

Action greedy_action(const ParamSet& params, std::span<const double> state) {
  const HeadOutput out = forward(params, state);
  if (params.spec.head == HeadKind::kActorCritic) {
    return action_from_index(argmax(out.probs));
  }
  return action_from_index(argmax(out.q()));
}

Action Policy::choose(std::span<const double> state, Rng& rng) const {
  if (params == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "policy has no parameters");
  }
  switch (mode) {
    case PolicyMode::kEpsilonGreedy:
      if (rng.uniform() < epsilon) {
        return action_from_index(rng.uniform_index(kNumActions));
      }
      return greedy_action(*params, state);
    case PolicyMode::kGreedy:
      return greedy_action(*params, state);
    case PolicyMode::kStochastic: {
      const HeadOutput out = forward(*params, state);
      if (params->spec.head != HeadKind::kActorCritic) {
        throw Error(ErrorKind::kInvalidArgument, "stochastic policy needs an actor-critic head");
      }
      return action_from_index(rng.categorical(out.probs));
    }
  }
  return Action::kSimTopic;
}

std::array<double, kNumActions> Policy::probabilities(std::span<const double> state) const {
  std::array<double, kNumActions> p{};
  if (mode == PolicyMode::kStochastic) {
    const HeadOutput out = forward(*params, state);
    std::copy_n(out.probs.begin(), kNumActions, p.begin());
    return p;
  }
  const std::size_t g = index_of(greedy_action(*params, state));
  const double explore = mode == PolicyMode::kEpsilonGreedy ? epsilon : 0.0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    p[i] = explore / static_cast<double>(kNumActions) + (i == g ? 1.0 - explore : 0.0);
  }
  return p;
}

std::size_t TrainLog::total_steps() const {
  std::size_t n = 0;
  for (const EpisodeLog& e : episodes) {
    n += e.steps;
  }
  return n;
}

std::vector<QuizIndex> probe_indices(const Universe& u, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "probe"));
  std::vector<QuizIndex> out(count);
  for (QuizIndex& q : out) {
    q = static_cast<QuizIndex>(rng.uniform_index(u.size()));
  }
  return out;
}

double probe_value(const ParamSet& params, const Universe& u, std::span<const QuizIndex> probes) {
  if (probes.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (QuizIndex q : probes) {
    const HeadOutput out = forward(params, u.state(q));
    sum += params.spec.head == HeadKind::kActorCritic ? out.value : max_of(out.q());
  }
  return sum / static_cast<double>(probes.size());
}

TrainResult train_dqn(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  const EpisodeConfig ecfg = episode_config(cfg, spec);
  TrainResult result;
  result.log.algorithm = Algorithm::kDqn;
  ParamSet& online = result.params;
  online = initial_params(u, cfg, Algorithm::kDqn);
  ParamSet target = online;
  Optimizer opt(cfg.optimizer, cfg.eta, online.values.size());
  ReplayBuffer replay(cfg.replay_capacity, cfg.per_alpha, cfg.per_epsilon);
  Rng replay_rng(derive_seed(cfg.seed, "replay"));
  const auto probes = probe_indices(u, cfg.probe_states, cfg.seed);
  std::size_t updates = 0;
  std::vector<Experience> batch;
  batch.reserve(cfg.batch_size);

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    Rng rng(episode_seed(cfg, ep));
    const double eps = epsilon_after(cfg, ep);
    const Policy policy{PolicyMode::kEpsilonGreedy, eps, &online};
    std::size_t cur = rng.uniform_index(u.size());
    EpisodeLog log = start_log(ep, eps, target_match(u.quiz(cur), spec));
    log.success = log.initial_match >= ecfg.beta;
    // PER importance-sampling exponent anneals to 1 over the run.
    const double frac =
        cfg.episodes > 1 ? static_cast<double>(ep) / static_cast<double>(cfg.episodes - 1) : 1.0;
    const double is_beta = cfg.per_beta_start + (1.0 - cfg.per_beta_start) * frac;
    for (std::size_t t = 0; t < ecfg.max_steps && !log.success; ++t) {
      const Action a = policy.choose(u.state(cur), rng);
      const StepRecord rec = step_or_stall(u, cur, a, spec, ecfg, rng);
      const bool done = rec.match_after >= ecfg.beta;
      replay.add({rec.from, rec.action, rec.reward, rec.to, done});
      record_step(log, rec);
      cur = rec.to;
      log.success = done;
      if (replay.size() < cfg.batch_size) {
        continue;
      }
      const ReplaySample sample = replay.sample(cfg.batch_size, is_beta, replay_rng);
      batch.clear();
      for (std::size_t i = 0; i < sample.slots.size(); ++i) {
        const StoredTransition& tr = sample.transitions[i];
        batch.push_back({u.state(tr.state), tr.action, tr.reward, u.state(tr.next_state), tr.done,
                         sample.weights[i]});
      }
      const UpdateResult up = dqn_update(online, target, batch, cfg.gamma, opt);
      replay.update_priorities(sample.slots, up.td_errors);
      ++updates;
      ++log.updates;
      if (updates % cfg.target_sync_interval == 0) {
        target.values = online.values;
        target.version = online.version;
      }
    }
    log.max_q = probe_value(online, u, probes);
    result.log.episodes.push_back(log);
  }
  return result;
}

TrainResult train_sarsa(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  const EpisodeConfig ecfg = episode_config(cfg, spec);
  TrainResult result;
  result.log.algorithm = Algorithm::kSarsa;
  ParamSet& params = result.params;
  params = initial_params(u, cfg, Algorithm::kSarsa);
  Optimizer opt(cfg.optimizer, cfg.eta, params.values.size());
  const auto probes = probe_indices(u, cfg.probe_states, cfg.seed);

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    Rng rng(episode_seed(cfg, ep));
    const double eps = epsilon_after(cfg, ep);
    const Policy policy{PolicyMode::kEpsilonGreedy, eps, &params};
    std::size_t cur = rng.uniform_index(u.size());
    EpisodeLog log = start_log(ep, eps, target_match(u.quiz(cur), spec));
    log.success = log.initial_match >= ecfg.beta;
    if (!log.success) {
      Action a = policy.choose(u.state(cur), rng);
      for (std::size_t t = 0; t < ecfg.max_steps; ++t) {
        const StepRecord rec = step_or_stall(u, cur, a, spec, ecfg, rng);
        const bool done = rec.match_after >= ecfg.beta;
        // The next action is chosen before the update, on-policy.
        const Action next = done ? a : policy.choose(u.state(rec.to), rng);
        const Experience e{u.state(rec.from), a, rec.reward, u.state(rec.to), done, 1.0};
        sarsa_update(params, e, next, cfg.gamma, opt);
        ++log.updates;
        record_step(log, rec);
        cur = rec.to;
        a = next;
        if (done) {
          log.success = true;
          break;
        }
      }
    }
    log.max_q = probe_value(params, u, probes);
    result.log.episodes.push_back(log);
  }
  return result;
}

namespace {

// Actor-critic training shared by A2C (one inline worker) and A3C.
TrainResult run_actor_critic(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg,
                             Algorithm algo, std::size_t workers, bool threaded) {
  cfg.validate();
  spec.validate();
  const EpisodeConfig ecfg = episode_config(cfg, spec);
  const ActorCriticTerms terms{cfg.entropy_coef, cfg.value_coef};
  ParamSet shared = initial_params(u, cfg, algo);
  Optimizer opt(cfg.optimizer, cfg.eta, shared.values.size());
  const auto probes = probe_indices(u, cfg.probe_states, cfg.seed);
  const std::size_t n_params = shared.values.size();

  std::atomic<std::size_t> next_episode{0};
  std::atomic<bool> abort{false};
  // Updates hold it shared (they race with each other by design); evaluation
  // snapshots hold it exclusively so they see a quiesced parameter vector.
  std::shared_mutex quiesce;
  std::mutex collector;
  std::vector<EpisodeLog> logs(cfg.episodes);
  std::vector<std::vector<std::uint64_t>> versions(cfg.episodes);
  std::exception_ptr failure;
  std::string failure_msg;

  auto load_snapshot = [&](ParamSet& snap) {
    for (std::size_t i = 0; i < n_params; ++i) {
      snap.values[i] = std::atomic_ref<double>(shared.values[i]).load(std::memory_order_relaxed);
    }
  };

  auto worker = [&](std::size_t id) {
    try {
      // Only the immutable spec is copied directly; values go through load_snapshot.
      ParamSet snap;
      snap.spec = shared.spec;
      snap.values.resize(n_params);
      std::vector<double> grad(n_params);
      for (;;) {
        const std::size_t ep = next_episode.fetch_add(1);
        if (ep >= cfg.episodes || abort.load()) {
          break;
        }
        Rng rng(episode_seed(cfg, ep));
        std::size_t cur = rng.uniform_index(u.size());
        EpisodeLog log = start_log(ep, 0.0, target_match(u.quiz(cur), spec));
        log.success = log.initial_match >= ecfg.beta;
        std::vector<std::uint64_t> local;
        for (std::size_t t = 0; t < ecfg.max_steps && !log.success; ++t) {
          load_snapshot(snap);
          const Policy policy{PolicyMode::kStochastic, 0.0, &snap};
          const Action a = policy.choose(u.state(cur), rng);
          const StepRecord rec = step_or_stall(u, cur, a, spec, ecfg, rng);
          const bool done = rec.match_after >= ecfg.beta;
          const Experience e{u.state(rec.from), a, rec.reward, u.state(rec.to), done, 1.0};
          std::fill(grad.begin(), grad.end(), 0.0);
          a2c_gradient(snap, std::span<const Experience>(&e, 1), cfg.gamma, terms, grad);
          for (double g : grad) {
            if (!std::isfinite(g)) {
              throw Error(ErrorKind::kNonFiniteGradient, "actor-critic gradient contains NaN or inf");
            }
          }
          {
            std::shared_lock lock(quiesce);
            local.push_back(opt.step_shared(shared, grad));
          }
          ++log.updates;
          record_step(log, rec);
          cur = rec.to;
          log.success = done;
        }
        {
          std::unique_lock lock(quiesce);
          load_snapshot(snap);
        }
        log.max_q = probe_value(snap, u, probes);
        std::lock_guard lock(collector);
        logs[ep] = log;
        versions[ep] = std::move(local);
      }
    } catch (const std::exception& ex) {
      abort.store(true);
      std::lock_guard lock(collector);
      if (!failure) {
        failure = std::current_exception();
        failure_msg = "worker " + std::to_string(id) + " failed: " + ex.what();
      }
    }
  };

  if (threaded) {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(worker, w);
    }
    for (std::thread& t : pool) {
      t.join();
    }
    if (failure) {
      throw Error(ErrorKind::kWorkerPanic, failure_msg);
    }
  } else {
    worker(0);
    if (failure) {
      std::rethrow_exception(failure);
    }
  }

  TrainResult result;
  result.log.algorithm = algo;
  result.log.episodes = std::move(logs);
  for (auto& v : versions) {
    result.log.versions.insert(result.log.versions.end(), v.begin(), v.end());
  }
  result.params = std::move(shared);
  return result;
}

}  // namespace

TrainResult train_a2c(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg) {
  return run_actor_critic(u, spec, cfg, Algorithm::kA2c, 1, false);
}

TrainResult a3c_train(const Universe& u, const TargetSpec& spec, const TrainConfig& cfg) {
  return run_actor_critic(u, spec, cfg, Algorithm::kA3c, cfg.workers, true);
}

TrainResult train_agent(Algorithm algo, const Universe& u, const TargetSpec& spec,
                        const TrainConfig& cfg) {
  switch (algo) {
    case Algorithm::kDqn:
      return train_dqn(u, spec, cfg);
    case Algorithm::kSarsa:
      return train_sarsa(u, spec, cfg);
    case Algorithm::kA2c:
      return train_a2c(u, spec, cfg);
    case Algorithm::kA3c:
      return a3c_train(u, spec, cfg);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown algorithm");
}

InferenceResult infer_quiz(const ParamSet& params, const Universe& u, const TargetSpec& spec,
                           const EpisodeConfig& cfg, std::size_t start, std::uint64_t seed) {
  if (params.spec.input_dim != u.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "network expects " + std::to_string(params.spec.input_dim) +
                    " inputs, universe states have " + std::to_string(u.state_dim()));
  }
  if (start >= u.size()) {
    throw Error(ErrorKind::kInvalidArgument, "inference start index out of range");
  }
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  const PolicyFn policy = [&params](const Universe& uu, std::size_t cur, Rng&) {
    return greedy_action(params, uu.state(cur));
  };
  InferenceResult res;
  res.episode = run_episode(u, start, policy, spec, cfg, rng);
  res.final_index = res.episode.final_index();
  res.final_match = res.episode.final_match;
  res.iterations = res.episode.trace.size();
  res.elapsed_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace quizforge
