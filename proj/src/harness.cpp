#include "quizforge/harness.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "csv_util.hpp"
#include "quizforge/errors.hpp"
#include "quizforge/oracle.hpp"

namespace quizforge {

namespace {

constexpr const char* kCurveSchema = "quizforge.curves/1";
constexpr const char* kTrajectorySchema = "quizforge.trajectories/1";
constexpr const char* kTrainLogSchema = "quizforge.trainlog/1";

std::string cell_key(const std::string& dataset, const std::string& target, double alpha) {
  return dataset + "|" + target + "|" + format_double(alpha);
}

MetricsRow failure_row(const std::string& dataset, const std::string& target,
                       const std::string& algorithm, double alpha, const std::string& why) {
  MetricsRow row;
  row.dataset = dataset;
  row.target = target;
  row.algorithm = algorithm;
  row.alpha = alpha;
  row.runs = 0;
  row.error = why.empty() ? "unknown failure" : why;
  return row;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed for " + path.string());
  }
}

void write_config_comment(const nlohmann::json& config, std::ostream& out) {
  out << "# config " << config.dump() << "\n";
}

nlohmann::json config_record(const char* schema, const nlohmann::json& config) {
  nlohmann::json j;
  j["schema"] = schema;
  j["kind"] = "config";
  j["config"] = config;
  return j;
}

}  // namespace

std::string to_string(Method m) {
  if (m == Method::kOracle) {
    return "oracle";
  }
  return to_string(*algorithm_of(m));
}

Method parse_method(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "oracle") {
    return Method::kOracle;
  }
  switch (parse_algorithm(t)) {
    case Algorithm::kDqn:
      return Method::kDqn;
    case Algorithm::kSarsa:
      return Method::kSarsa;
    case Algorithm::kA2c:
      return Method::kA2c;
    case Algorithm::kA3c:
      return Method::kA3c;
  }
  return Method::kOracle;
}

std::optional<Algorithm> algorithm_of(Method m) {
  switch (m) {
    case Method::kDqn:
      return Algorithm::kDqn;
    case Method::kSarsa:
      return Algorithm::kSarsa;
    case Method::kA2c:
      return Algorithm::kA2c;
    case Method::kA3c:
      return Algorithm::kA3c;
    case Method::kOracle:
      return std::nullopt;
  }
  return std::nullopt;
}

void ExperimentPlan::validate() const {
  if (datasets.empty()) throw Error(ErrorKind::kConfig, "plan has no datasets");
  if (targets.empty()) throw Error(ErrorKind::kConfig, "plan has no targets");
  if (methods.empty()) throw Error(ErrorKind::kConfig, "plan has no algorithms");
  if (alphas.empty()) throw Error(ErrorKind::kConfig, "plan has no alphas");
  if (runs == 0) throw Error(ErrorKind::kConfig, "plan runs must be at least 1");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::kConfig, "plan alphas must lie in [0, 1]");
  }
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorKind::kConfig, "plan beta must lie in (0, 1]");
  train.validate();
}

ExperimentPlan plan_from_config(const Config& cfg) {
  cfg.validate();
  ExperimentPlan plan;
  if (cfg.plan_datasets.empty()) {
    plan.datasets.push_back({"default", cfg.data});
  }
  for (const std::string& name : cfg.plan_datasets) {
    plan.datasets.push_back({name, name == "default" ? cfg.data : cfg.named_data.at(name)});
  }
  plan.targets = cfg.plan_targets;
  plan.custom_tc = cfg.tc;
  plan.custom_td = cfg.td;
  plan.methods.clear();
  for (const std::string& m : cfg.plan_algorithms) {
    plan.methods.push_back(parse_method(m));
  }
  plan.alphas = cfg.plan_alphas;
  plan.runs = cfg.plan_runs;
  plan.seed = cfg.seed;
  plan.quiz_size = cfg.quiz_size;
  plan.universe_size = cfg.universe_size;
  plan.beta = cfg.beta;
  plan.train = train_config(cfg);
  return plan;
}

std::array<double, kNumActions> MetricsRow::action_shares() const {
  std::array<double, kNumActions> shares{};
  std::size_t total = 0;
  for (std::size_t c : action_histogram) {
    total += c;
  }
  if (total > 0) {
    for (std::size_t i = 0; i < kNumActions; ++i) {
      shares[i] = static_cast<double>(action_histogram[i]) / static_cast<double>(total);
    }
  }
  return shares;
}

std::vector<MetricsRow> aggregate(const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricsRow*>> groups;
  for (const MetricsRow& r : rows) {
    const Key key{r.dataset, r.target, r.algorithm, r.alpha};
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) {
      order.push_back(key);
    }
    it->second.push_back(&r);
  }
  std::vector<MetricsRow> out;
  out.reserve(order.size());
  for (const Key& key : order) {
    const auto& members = groups.at(key);
    MetricsRow agg;
    std::tie(agg.dataset, agg.target, agg.algorithm, agg.alpha) = key;
    agg.run = 0;
    agg.runs = 0;
    double sim = 0.0;
    double iters = 0.0;
    double time = 0.0;
    double success = 0.0;
    for (const MetricsRow* r : members) {
      if (!r->ok()) {
        if (agg.error.empty()) {
          agg.error = r->error;
        }
        continue;
      }
      const auto w = static_cast<double>(r->runs);
      sim += r->mean_similarity * w;
      iters += r->mean_iterations * w;
      time += r->mean_infer_time_sec * w;
      success += r->success_rate * w;
      agg.runs += r->runs;
      agg.oracle_similarity = r->oracle_similarity;
      for (std::size_t i = 0; i < kNumActions; ++i) {
        agg.action_histogram[i] += r->action_histogram[i];
      }
    }
    if (agg.runs > 0) {
      const auto n = static_cast<double>(agg.runs);
      agg.mean_similarity = sim / n;
      agg.mean_iterations = iters / n;
      agg.mean_infer_time_sec = time / n;
      agg.success_rate = success / n;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

Trajectory trajectory_of(const Universe& u, const EpisodeResult& episode, const TargetSpec& spec) {
  Trajectory t;
  t.alpha = spec.alpha;
  auto point = [&](std::size_t step, QuizIndex q, std::optional<Action> action) {
    const Quiz& quiz = u.quiz(q);
    TrajectoryPoint p;
    p.step = step;
    p.quiz = q;
    p.mcq_ids = quiz.mcq_ids;
    p.topic_match = topic_match(quiz, spec.tc);
    p.diff_match = diff_match(quiz, spec.td);
    p.target_match = target_match(quiz, spec);
    p.action = action;
    return p;
  };
  t.points.push_back(point(0, episode.start, std::nullopt));
  for (std::size_t i = 0; i < episode.trace.size(); ++i) {
    t.points.push_back(point(i + 1, episode.trace[i].to, episode.trace[i].action));
  }
  return t;
}

std::vector<MetricsRow> evaluate_model(const ParamSet& params, const Universe& u,
                                       const TargetSpec& spec, const EpisodeConfig& cfg,
                                       std::size_t runs, std::uint64_t seed,
                                       const InferenceLabels& labels,
                                       std::vector<Trajectory>* trajectories) {
  if (params.spec.input_dim != u.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "model expects " + std::to_string(params.spec.input_dim) +
                    " state entries, destination universe has " + std::to_string(u.state_dim()));
  }
  std::vector<MetricsRow> rows;
  rows.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    Rng start_rng(derive_seed(seed, "start", r));
    const std::size_t start = start_rng.uniform_index(u.size());
    const InferenceResult res = infer_quiz(params, u, spec, cfg, start, derive_seed(seed, "infer", r));
    MetricsRow row;
    row.dataset = labels.dataset;
    row.target = labels.target;
    row.algorithm = labels.algorithm;
    row.alpha = spec.alpha;
    row.run = r;
    row.runs = 1;
    row.mean_similarity = res.final_match;
    row.mean_iterations = static_cast<double>(res.iterations);
    row.mean_infer_time_sec = res.elapsed_sec;
    row.success_rate = res.episode.success ? 1.0 : 0.0;
    for (const StepRecord& s : res.episode.trace) {
      ++row.action_histogram[index_of(s.action)];
    }
    rows.push_back(row);
    if (trajectories != nullptr) {
      Trajectory t = trajectory_of(u, res.episode, spec);
      t.dataset = labels.dataset;
      t.target = labels.target;
      t.algorithm = labels.algorithm;
      t.run = r;
      trajectories->push_back(std::move(t));
    }
  }
  return rows;
}

MetricsRow transfer_run(const ParamSet& source, const Universe& dest, const TargetSpec& spec,
                        const EpisodeConfig& cfg, std::size_t runs, std::uint64_t seed,
                        const InferenceLabels& labels) {
  if (runs == 0) {
    throw Error(ErrorKind::kInvalidArgument, "transfer needs at least one run");
  }
  const auto rows = evaluate_model(source, dest, spec, cfg, runs, seed, labels);
  MetricsRow agg = aggregate(rows).front();
  agg.oracle_similarity = oracle_best(dest, spec).match;
  return agg;
}

std::array<double, kNumActions> action_distribution(const TrainLog& log, std::size_t first,
                                                    std::size_t last) {
  if (first >= last || last > log.episodes.size()) {
    throw Error(ErrorKind::kEmptyWindow, "episode window [" + std::to_string(first) + ", " +
                                             std::to_string(last) + ") is empty or outside the " +
                                             std::to_string(log.episodes.size()) + "-episode log");
  }
  std::array<double, kNumActions> counts{};
  double total = 0.0;
  for (std::size_t e = first; e < last; ++e) {
    for (std::size_t i = 0; i < kNumActions; ++i) {
      counts[i] += static_cast<double>(log.episodes[e].action_counts[i]);
      total += static_cast<double>(log.episodes[e].action_counts[i]);
    }
  }
  if (total == 0.0) {
    throw Error(ErrorKind::kEmptyWindow, "no actions were taken inside the episode window");
  }
  for (double& c : counts) {
    c /= total;
  }
  return counts;
}

PlanResult run_plan(const ExperimentPlan& plan, const ProgressFn& progress) {
  plan.validate();
  PlanResult result;
  auto say = [&](const std::string& msg) {
    if (progress) {
      progress(msg);
    }
  };
  for (const DatasetRef& ref : plan.datasets) {
    std::optional<Universe> universe;
    try {
      const Dataset ds = materialize_dataset(ref.data, derive_seed(plan.seed, "data." + ref.name));
      say("dataset " + ref.name + ": " + std::to_string(ds.mcqs.size()) + " MCQs, building " +
          std::to_string(plan.universe_size) + " quizzes");
      universe = Universe::build(ds, plan.quiz_size, plan.universe_size,
                                 derive_seed(plan.seed, "universe." + ref.name));
    } catch (const std::exception& e) {
      say("dataset " + ref.name + " failed: " + e.what());
      for (const std::string& target : plan.targets) {
        for (double alpha : plan.alphas) {
          for (Method m : plan.methods) {
            result.rows.push_back(failure_row(ref.name, target, to_string(m), alpha, e.what()));
          }
        }
      }
      continue;
    }
    const Universe& u = *universe;
    for (const std::string& target : plan.targets) {
      for (double alpha : plan.alphas) {
        const std::string key = cell_key(ref.name, target, alpha);
        TargetSpec spec;
        OracleResult best;
        try {
          spec = make_target(target, u.n_topics(), u.n_levels(), alpha, plan.beta, plan.custom_tc,
                             plan.custom_td);
          best = oracle_best(u, spec);
        } catch (const std::exception& e) {
          for (Method m : plan.methods) {
            result.rows.push_back(failure_row(ref.name, target, to_string(m), alpha, e.what()));
          }
          continue;
        }
        const EpisodeConfig ecfg = episode_config(plan.train, spec);
        const std::uint64_t eval_seed = derive_seed(plan.seed, "eval|" + key);
        for (Method m : plan.methods) {
          const std::string name = to_string(m);
          say("cell " + key + "|" + name);
          try {
            std::vector<MetricsRow> rows;
            if (m == Method::kOracle) {
              for (std::size_t r = 0; r < plan.runs; ++r) {
                MetricsRow row;
                row.dataset = ref.name;
                row.target = target;
                row.algorithm = name;
                row.alpha = alpha;
                row.run = r;
                row.mean_similarity = best.match;
                row.mean_iterations = static_cast<double>(best.scan_count);
                row.mean_infer_time_sec = best.elapsed_sec;
                row.success_rate = best.match >= plan.beta ? 1.0 : 0.0;
                rows.push_back(row);
              }
            } else {
              TrainConfig tcfg = plan.train;
              tcfg.seed = derive_seed(plan.seed, "train|" + key + "|" + name);
              TrainResult trained = train_agent(*algorithm_of(m), u, spec, tcfg);
              result.curves.push_back({ref.name, target, name, alpha, std::move(trained.log)});
              rows = evaluate_model(trained.params, u, spec, ecfg, plan.runs, eval_seed,
                                    {ref.name, target, name}, &result.trajectories);
            }
            for (MetricsRow& row : rows) {
              row.oracle_similarity = best.match;
              result.rows.push_back(std::move(row));
            }
          } catch (const std::exception& e) {
            say("cell " + key + "|" + name + " failed: " + e.what());
            result.rows.push_back(failure_row(ref.name, target, name, alpha, e.what()));
          }
        }
      }
    }
  }
  return result;
}

void write_report_csv(const std::vector<MetricsRow>& aggregated, const nlohmann::json& config,
                      std::ostream& out) {
  write_config_comment(config, out);
  out << "dataset,target,algorithm,alpha,runs,mean_similarity,mean_iterations,success_rate,"
         "share_sim_topic,share_sim_level,share_diss_topic,share_diss_level,oracle_similarity,"
         "error\n";
  for (const MetricsRow& r : aggregated) {
    const auto shares = r.action_shares();
    out << csv_escape(r.dataset) << ',' << csv_escape(r.target) << ',' << csv_escape(r.algorithm)
        << ',' << format_double(r.alpha) << ',' << r.runs << ',' << format_double(r.mean_similarity)
        << ',' << format_double(r.mean_iterations) << ',' << format_double(r.success_rate);
    for (double s : shares) {
      out << ',' << format_double(s);
    }
    out << ',' << format_double(r.oracle_similarity) << ',' << csv_escape(r.error) << '\n';
  }
}

void write_runs_csv(const std::vector<MetricsRow>& rows, const nlohmann::json& config,
                    std::ostream& out) {
  write_config_comment(config, out);
  out << "dataset,target,algorithm,alpha,run,runs,similarity,iterations,success,"
         "n_sim_topic,n_sim_level,n_diss_topic,n_diss_level,oracle_similarity,error\n";
  for (const MetricsRow& r : rows) {
    out << csv_escape(r.dataset) << ',' << csv_escape(r.target) << ',' << csv_escape(r.algorithm)
        << ',' << format_double(r.alpha) << ',' << r.run << ',' << r.runs << ','
        << format_double(r.mean_similarity) << ',' << format_double(r.mean_iterations) << ','
        << format_double(r.success_rate);
    for (std::size_t c : r.action_histogram) {
      out << ',' << c;
    }
    out << ',' << format_double(r.oracle_similarity) << ',' << csv_escape(r.error) << '\n';
  }
}

void write_timing_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "dataset,target,algorithm,alpha,run,infer_time_sec\n";
  for (const MetricsRow& r : rows) {
    out << csv_escape(r.dataset) << ',' << csv_escape(r.target) << ',' << csv_escape(r.algorithm)
        << ',' << format_double(r.alpha) << ',' << r.run << ','
        << format_double(r.mean_infer_time_sec) << '\n';
  }
}

void write_curves_jsonl(const std::vector<TrainingCurve>& curves, const nlohmann::json& config,
                        std::ostream& out) {
  out << config_record(kCurveSchema, config).dump() << '\n';
  for (const TrainingCurve& c : curves) {
    for (const EpisodeLog& e : c.log.episodes) {
      std::array<double, kNumActions> shares{};
      if (e.steps > 0) {
        for (std::size_t i = 0; i < kNumActions; ++i) {
          shares[i] = static_cast<double>(e.action_counts[i]) / static_cast<double>(e.steps);
        }
      }
      nlohmann::json j;
      j["schema"] = kCurveSchema;
      j["kind"] = "episode";
      j["dataset"] = c.dataset;
      j["target"] = c.target;
      j["algorithm"] = c.algorithm;
      j["alpha"] = c.alpha;
      j["episode"] = e.episode;
      j["epsilon"] = e.epsilon;
      j["steps"] = e.steps;
      j["success"] = e.success;
      j["max_q"] = e.max_q;
      j["action_shares"] = shares;
      j["terminal_match"] = e.terminal_match;
      j["total_reward"] = e.total_reward;
      out << j.dump() << '\n';
    }
  }
}

void write_trajectories_jsonl(const std::vector<Trajectory>& trajectories,
                              const nlohmann::json& config, std::ostream& out) {
  out << config_record(kTrajectorySchema, config).dump() << '\n';
  for (const Trajectory& t : trajectories) {
    for (const TrajectoryPoint& p : t.points) {
      nlohmann::json j;
      j["schema"] = kTrajectorySchema;
      j["kind"] = "step";
      j["dataset"] = t.dataset;
      j["target"] = t.target;
      j["algorithm"] = t.algorithm;
      j["alpha"] = t.alpha;
      j["run"] = t.run;
      j["step"] = p.step;
      j["quiz"] = p.quiz;
      j["mcq_ids"] = p.mcq_ids;
      j["action"] = p.action ? nlohmann::json(std::string(to_string(*p.action))) : nlohmann::json();
      j["topic_match"] = p.topic_match;
      j["diff_match"] = p.diff_match;
      j["target_match"] = p.target_match;
      out << j.dump() << '\n';
    }
  }
}

void write_train_log(const TrainLog& log, const nlohmann::json& config, std::ostream& out) {
  nlohmann::json head = config_record(kTrainLogSchema, config);
  head["algorithm"] = to_string(log.algorithm);
  head["episodes"] = log.episodes.size();
  out << head.dump() << '\n';
  for (const EpisodeLog& e : log.episodes) {
    nlohmann::json j;
    j["schema"] = kTrainLogSchema;
    j["kind"] = "episode";
    j["episode"] = e.episode;
    j["epsilon"] = e.epsilon;
    j["steps"] = e.steps;
    j["success"] = e.success;
    j["initial_match"] = e.initial_match;
    j["terminal_match"] = e.terminal_match;
    j["total_reward"] = e.total_reward;
    j["action_counts"] = e.action_counts;
    j["max_q"] = e.max_q;
    j["stalls"] = e.stalls;
    j["updates"] = e.updates;
    out << j.dump() << '\n';
  }
}

void emit_report(const PlanResult& result, const std::filesystem::path& dir,
                 const nlohmann::json& config) {
  if (result.rows.empty()) {
    throw Error(ErrorKind::kEmptyResult, "no metrics rows to report");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  }
  auto emit = [&](const char* name, const auto& writer) {
    const auto path = dir / name;
    std::ofstream out = open_output(path);
    writer(out);
    finish_output(out, path);
  };
  emit("report.csv", [&](std::ostream& o) { write_report_csv(aggregate(result.rows), config, o); });
  emit("runs.csv", [&](std::ostream& o) { write_runs_csv(result.rows, config, o); });
  emit("timing.csv", [&](std::ostream& o) { write_timing_csv(result.rows, o); });
  emit("curves.jsonl", [&](std::ostream& o) { write_curves_jsonl(result.curves, config, o); });
  emit("trajectories.jsonl",
       [&](std::ostream& o) { write_trajectories_jsonl(result.trajectories, config, o); });
}

std::vector<MetricsRow> read_runs_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  auto col = [&](const std::vector<std::string>& f, const char* name) -> const std::string& {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::kParseError, std::string("runs file lacks column '") + name + "'");
    }
    return f.at(static_cast<std::size_t>(it - header.begin()));
  };
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParseError,
                  "runs file line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    auto fields = split_csv_line(line);
    if (!fields) {
      throw Error(ErrorKind::kParseError, "runs file line " + std::to_string(line_no) +
                                              ": unterminated quote");
    }
    if (header.empty()) {
      header = *fields;
      continue;
    }
    if (fields->size() != header.size()) {
      throw Error(ErrorKind::kParseError,
                  "runs file line " + std::to_string(line_no) + ": wrong number of fields");
    }
    const auto& f = *fields;
    MetricsRow r;
    r.dataset = col(f, "dataset");
    r.target = col(f, "target");
    r.algorithm = col(f, "algorithm");
    r.alpha = num(col(f, "alpha"));
    r.run = static_cast<std::size_t>(num(col(f, "run")));
    r.runs = static_cast<std::size_t>(num(col(f, "runs")));
    r.mean_similarity = num(col(f, "similarity"));
    r.mean_iterations = num(col(f, "iterations"));
    r.success_rate = num(col(f, "success"));
    r.action_histogram = {static_cast<std::size_t>(num(col(f, "n_sim_topic"))),
                          static_cast<std::size_t>(num(col(f, "n_sim_level"))),
                          static_cast<std::size_t>(num(col(f, "n_diss_topic"))),
                          static_cast<std::size_t>(num(col(f, "n_diss_level")))};
    r.oracle_similarity = num(col(f, "oracle_similarity"));
    r.error = col(f, "error");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace quizforge
