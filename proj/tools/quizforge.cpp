// quizforge command-line driver.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "quizforge/agents.hpp"
#include "quizforge/config.hpp"
#include "quizforge/datagen.hpp"
#include "quizforge/environment.hpp"
#include "quizforge/errors.hpp"
#include "quizforge/harness.hpp"
#include "quizforge/network.hpp"
#include "quizforge/oracle.hpp"

namespace fs = std::filesystem;
using namespace quizforge;

namespace {

// Flag name -> config key. Every flag is a shorthand for a config entry.
const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"--seed", "run.seed"},
    {"--out", "run.out_dir"},
    {"--data-source", "data.source"},
    {"--data-path", "data.path"},
    {"--n-mcqs", "data.n_mcqs"},
    {"--n-topics", "data.n_topics"},
    {"--n-levels", "data.n_levels"},
    {"--topic-concentration", "data.topic_concentration"},
    {"--level-concentration", "data.level_concentration"},
    {"--draw", "data.draw"},
    {"--topic-subset", "data.topic_subset"},
    {"--quiz-size", "env.quiz_size"},
    {"--universe-size", "env.universe_size"},
    {"--max-steps", "env.max_steps"},
    {"--reward", "env.reward"},
    {"--target", "target.name"},
    {"--alpha", "target.alpha"},
    {"--beta", "target.beta"},
    {"--algo", "train.algorithm"},
    {"--episodes", "train.episodes"},
    {"--eta", "train.eta"},
    {"--gamma", "train.gamma"},
    {"--workers", "train.workers"},
    {"--optimizer", "train.optimizer"},
    {"--runs", "plan.runs"},
    {"--dataset", "io.dataset"},
    {"--universe", "io.universe"},
    {"--checkpoint", "io.checkpoint"},
    {"--source-checkpoint", "io.source_checkpoint"},
};

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config,-c", opts.config_path, "INI configuration file");
  cmd->add_option("--set", opts.sets, "Override any config key: section.key=value");
  for (const auto& [flag, key] : kFlagKeys) {
    cmd->add_option_function<std::string>(
        flag, [&opts, key = key](const std::string& v) { opts.flags[key] = v; },
        "Same as " + key);
  }
}

// File values, then QUIZFORGE_SEED, then flags.
Config resolve(const Options& opts) {
  Config cfg = opts.config_path.empty() ? Config{} : load_config(opts.config_path);
  apply_env_overrides(cfg);
  for (const std::string& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "--set expects section.key=value, got '" + s + "'");
    }
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : opts.flags) {
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

fs::path out_file(const Config& cfg, const fs::path& explicit_path, const std::string& fallback) {
  fs::path p = explicit_path.empty() ? cfg.out_dir / fallback : explicit_path;
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  return p;
}

void write_sidecar(const fs::path& artifact, const Config& cfg) {
  std::ofstream out(artifact.string() + ".config.ini");
  out << cfg.to_ini();
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write config next to " + artifact.string());
  }
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
  writer(out);
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed for " + path.string());
  }
}

void require_file(const fs::path& path, const std::string& key, const std::string& what) {
  if (path.empty()) {
    throw Error(ErrorKind::kConfig, what + " is required: set " + key);
  }
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kIo, what + " '" + path.string() + "' does not exist (" + key + ")");
  }
}

Dataset dataset_for(const Config& cfg) {
  if (!cfg.dataset_path.empty() && fs::exists(cfg.dataset_path)) {
    DataConfig d = cfg.data;
    d.source = "csv";
    d.path = cfg.dataset_path;
    return materialize_dataset(d, derive_seed(cfg.seed, "data"));
  }
  return materialize_dataset(cfg.data, derive_seed(cfg.seed, "data"));
}

Universe universe_for(const Config& cfg) {
  require_file(cfg.universe_path, "io.universe", "universe file");
  return Universe::load(cfg.universe_path);
}

nlohmann::json quiz_json(const Universe& u, QuizIndex i) {
  const Quiz& q = u.quiz(i);
  return {{"index", i}, {"mcq_ids", q.mcq_ids}, {"topic_vec", q.topic_vec}, {"diff_vec", q.diff_vec}};
}

int cmd_gen_synthetic(const Config& cfg) {
  DataConfig d = cfg.data;
  d.source = "synthetic";
  const Dataset ds = materialize_dataset(d, derive_seed(cfg.seed, "data"));
  const fs::path path = out_file(cfg, cfg.dataset_path, "dataset.csv");
  save_dataset(ds, path);
  write_sidecar(path, cfg);
  std::cout << "wrote " << ds.mcqs.size() << " MCQs (" << ds.n_topics() << " topics, "
            << ds.n_levels() << " levels) to " << path.string() << "\n";
  return 0;
}

int cmd_load_data(const Config& cfg) {
  DataConfig d = cfg.data;
  if (d.source != "csv") {
    require_file(cfg.dataset_path, "io.dataset", "dataset file");
    d.source = "csv";
    d.path = cfg.dataset_path;
  }
  const Dataset ds = materialize_dataset(d, derive_seed(cfg.seed, "data"));
  std::vector<std::size_t> topics(ds.n_topics());
  std::vector<std::size_t> levels(ds.n_levels());
  for (const Mcq& m : ds.mcqs) {
    ++topics[m.topic];
    ++levels[m.level];
  }
  nlohmann::json j = {{"mcqs", ds.mcqs.size()},
                      {"topics", ds.topic_labels},
                      {"levels", ds.level_labels},
                      {"topic_counts", topics},
                      {"level_counts", levels}};
  std::cout << j.dump(2) << "\n";
  if (d.path != cfg.dataset_path && !cfg.dataset_path.empty()) {
    const fs::path path = out_file(cfg, cfg.dataset_path, "dataset.csv");
    save_dataset(ds, path);
    write_sidecar(path, cfg);
    std::cout << "wrote normalized dataset to " << path.string() << "\n";
  }
  return 0;
}

int cmd_build_env(const Config& cfg) {
  const Dataset ds = dataset_for(cfg);
  const Universe u = Universe::build(ds, cfg.quiz_size, cfg.universe_size,
                                     derive_seed(cfg.seed, "universe"));
  const fs::path path = out_file(cfg, cfg.universe_path, "universe.jsonl");
  u.save(path);
  write_sidecar(path, cfg);
  std::cout << "wrote universe of " << u.size() << " quizzes (k=" << u.k()
            << ", state_dim=" << u.state_dim() << ") to " << path.string() << "\n";
  return 0;
}

int cmd_train(const Config& cfg) {
  const Universe u = universe_for(cfg);
  const TargetSpec spec = target_from_config(cfg, u.n_topics(), u.n_levels());
  const TrainResult res = train_agent(cfg.algorithm, u, spec, train_config(cfg));
  const fs::path ckpt = out_file(cfg, cfg.checkpoint_path, "model.qfnet");
  save_params(res.params, ckpt);
  write_sidecar(ckpt, cfg);
  const fs::path log_path = out_file(cfg, {}, "trainlog.jsonl");
  write_file(log_path, [&](std::ostream& o) { write_train_log(res.log, cfg.to_json(), o); });
  std::size_t successes = 0;
  for (const EpisodeLog& e : res.log.episodes) {
    successes += e.success ? 1 : 0;
  }
  std::cout << "trained " << to_string(cfg.algorithm) << " for " << res.log.episodes.size()
            << " episodes (" << res.log.total_steps() << " steps, " << successes
            << " successful); checkpoint " << ckpt.string() << ", log " << log_path.string()
            << "\n";
  return 0;
}

int cmd_infer(const Config& cfg) {
  require_file(cfg.checkpoint_path, "io.checkpoint", "checkpoint");
  const ParamSet params = load_params(cfg.checkpoint_path);
  const Universe u = universe_for(cfg);
  const TargetSpec spec = target_from_config(cfg, u.n_topics(), u.n_levels());
  std::vector<Trajectory> trajectories;
  auto rows = evaluate_model(params, u, spec, episode_config(cfg), cfg.plan_runs,
                             derive_seed(cfg.seed, "infer"),
                             {"default", cfg.target, params.tag.empty() ? "model" : params.tag},
                             &trajectories);
  const double best = oracle_best(u, spec).match;
  for (MetricsRow& r : rows) {
    r.oracle_similarity = best;
  }
  const nlohmann::json config = cfg.to_json();
  write_file(out_file(cfg, {}, "infer.csv"),
             [&](std::ostream& o) { write_runs_csv(rows, config, o); });
  write_file(out_file(cfg, {}, "infer_trajectories.jsonl"),
             [&](std::ostream& o) { write_trajectories_jsonl(trajectories, config, o); });
  const MetricsRow agg = aggregate(rows).front();
  std::cout << "mean similarity " << agg.mean_similarity << " over " << agg.runs
            << " runs, mean iterations " << agg.mean_iterations << ", success rate "
            << agg.success_rate << ", oracle " << best << "\n";
  return 0;
}

int cmd_oracle(const Config& cfg) {
  const Universe u = universe_for(cfg);
  const TargetSpec spec = target_from_config(cfg, u.n_topics(), u.n_levels());
  const OracleResult best = oracle_best(u, spec);
  nlohmann::json j = quiz_json(u, best.index);
  j["match"] = best.match;
  j["scan_count"] = best.scan_count;
  j["elapsed_sec"] = best.elapsed_sec;
  j["config"] = cfg.to_json();
  write_file(out_file(cfg, {}, "oracle.json"), [&](std::ostream& o) { o << j.dump(2) << "\n"; });
  j.erase("config");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_transfer(const Config& cfg) {
  require_file(cfg.source_checkpoint, "io.source_checkpoint", "source checkpoint");
  const ParamSet params = load_params(cfg.source_checkpoint);
  const Universe u = universe_for(cfg);
  const TargetSpec spec = target_from_config(cfg, u.n_topics(), u.n_levels());
  const MetricsRow row = transfer_run(params, u, spec, episode_config(cfg), cfg.plan_runs,
                                      derive_seed(cfg.seed, "infer"),
                                      {"default", cfg.target, params.tag.empty() ? "model" : params.tag});
  write_file(out_file(cfg, {}, "transfer.csv"),
             [&](std::ostream& o) { write_report_csv({row}, cfg.to_json(), o); });
  std::cout << "transfer to " << cfg.target << ": mean similarity " << row.mean_similarity
            << ", mean iterations " << row.mean_iterations << ", oracle " << row.oracle_similarity
            << "\n";
  return 0;
}

int cmd_run_plan(const Config& cfg) {
  const ExperimentPlan plan = plan_from_config(cfg);
  const PlanResult res =
      run_plan(plan, [](const std::string& msg) { std::cerr << "[run-plan] " << msg << "\n"; });
  emit_report(res, cfg.out_dir, cfg.to_json());
  std::size_t failed = 0;
  for (const MetricsRow& r : res.rows) {
    failed += r.ok() ? 0 : 1;
  }
  std::cout << "wrote report for " << res.rows.size() << " rows to " << cfg.out_dir.string();
  if (failed > 0) {
    std::cout << " (" << failed << " failed cells)";
  }
  std::cout << "\n";
  return failed > 0 ? 2 : 0;
}

int cmd_report(const Config& cfg, const std::string& runs_path) {
  const fs::path in_path = runs_path.empty() ? cfg.out_dir / "runs.csv" : fs::path(runs_path);
  std::ifstream in(in_path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot read runs file " + in_path.string());
  }
  const auto rows = read_runs_csv(in);
  if (rows.empty()) {
    throw Error(ErrorKind::kEmptyResult, "runs file " + in_path.string() + " has no rows");
  }
  const fs::path out_path = out_file(cfg, {}, "report.csv");
  write_file(out_path, [&](std::ostream& o) { write_report_csv(aggregate(rows), cfg.to_json(), o); });
  std::cout << "wrote " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quizforge: compose quizzes with reinforcement-learning agents"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    Options opts;
  };
  std::map<std::string, Command> cmds;
  const std::vector<std::pair<std::string, std::string>> specs = {
      {"gen-synthetic", "Generate a synthetic MCQ dataset"},
      {"load-data", "Load and summarize an MCQ CSV dataset"},
      {"build-env", "Sample the quiz universe and its candidate lists"},
      {"train", "Train an agent on a universe and target"},
      {"infer", "Run greedy inference with a trained checkpoint"},
      {"oracle", "Find the best quiz by exhaustive scan"},
      {"transfer", "Evaluate a trained model on another target or universe"},
      {"run-plan", "Run a full experiment plan and write the report"},
      {"report", "Re-aggregate a runs.csv file into report.csv"},
  };
  for (const auto& [name, help] : specs) {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    add_common(c.app, c.opts);
  }
  std::string plan_file;
  cmds["run-plan"].app->add_option("plan", plan_file, "Plan config (same as --config)");
  std::string runs_file;
  cmds["report"].app->add_option("--runs-file", runs_file, "runs.csv to aggregate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto& [name, c] : cmds) {
      if (!c.app->parsed()) {
        continue;
      }
      if (name == "run-plan" && !plan_file.empty()) {
        if (!c.opts.config_path.empty()) {
          throw Error(ErrorKind::kConfig, "give the plan either positionally or via --config");
        }
        c.opts.config_path = plan_file;
      }
      const Config cfg = resolve(c.opts);
      if (name == "gen-synthetic") return cmd_gen_synthetic(cfg);
      if (name == "load-data") return cmd_load_data(cfg);
      if (name == "build-env") return cmd_build_env(cfg);
      if (name == "train") return cmd_train(cfg);
      if (name == "infer") return cmd_infer(cfg);
      if (name == "oracle") return cmd_oracle(cfg);
      if (name == "transfer") return cmd_transfer(cfg);
      if (name == "run-plan") return cmd_run_plan(cfg);
      if (name == "report") return cmd_report(cfg, runs_file);
    }
  } catch (const Error& e) {
    std::cerr << "quizforge: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "quizforge: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
