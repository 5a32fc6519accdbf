#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quizforge/agents.hpp"
#include "quizforge/config.hpp"
#include "quizforge/environment.hpp"

namespace quizforge {

enum class Method { kDqn, kSarsa, kA2c, kA3c, kOracle };

std::string to_string(Method m);
Method parse_method(const std::string& text);
std::optional<Algorithm> algorithm_of(Method m);

struct DatasetRef {
  std::string name;
  DataConfig data;
};

struct ExperimentPlan {
  std::vector<DatasetRef> datasets;
  // Named targets: uniform, bias, bias_prime or custom.
  std::vector<std::string> targets = {"uniform"};
  std::vector<double> custom_tc;
  std::vector<double> custom_td;
  std::vector<Method> methods = {Method::kDqn, Method::kOracle};
  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  std::size_t quiz_size = 10;
  std::size_t universe_size = 10000;
  double beta = 0.85;
  // Shared hyperparameters; the seed is replaced per cell.
  TrainConfig train;

  void validate() const;
};

ExperimentPlan plan_from_config(const Config& cfg);

struct MetricsRow {
  std::string dataset;
  std::string target;
  std::string algorithm;
  double alpha = 0.0;
  // Run index for per-run rows; 0 for aggregates.
  std::size_t run = 0;
  // Number of runs folded into this row.
  std::size_t runs = 1;
  double mean_similarity = 0.0;
  double mean_iterations = 0.0;
  double mean_infer_time_sec = 0.0;
  double success_rate = 0.0;
  // Inference action counts in SimTopic, SimLevel, DissTopic, DissLevel order.
  std::array<std::size_t, kNumActions> action_histogram{};
  // Best match in the universe for the same target and alpha.
  double oracle_similarity = 0.0;
  // Set when the cell failed; the metrics are then meaningless.
  std::string error;

  bool ok() const { return error.empty(); }
  std::array<double, kNumActions> action_shares() const;
};

// Groups rows by (dataset, target, algorithm, alpha) in first-seen order and
// averages the per-run metrics.
std::vector<MetricsRow> aggregate(const std::vector<MetricsRow>& rows);

struct TrajectoryPoint {
  std::size_t step = 0;
  QuizIndex quiz = 0;
  std::vector<McqId> mcq_ids;
  double topic_match = 0.0;
  double diff_match = 0.0;
  double target_match = 0.0;
  // Action that led here; empty for the start quiz.
  std::optional<Action> action;
};

struct Trajectory {
  std::string dataset;
  std::string target;
  std::string algorithm;
  double alpha = 0.0;
  std::size_t run = 0;
  std::vector<TrajectoryPoint> points;
};

struct TrainingCurve {
  std::string dataset;
  std::string target;
  std::string algorithm;
  double alpha = 0.0;
  TrainLog log;
};

struct PlanResult {
  std::vector<MetricsRow> rows;
  std::vector<TrainingCurve> curves;
  std::vector<Trajectory> trajectories;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs every (dataset, target, method, alpha) cell. A failing cell yields a
// row with `error` set and the remaining cells still run.
PlanResult run_plan(const ExperimentPlan& plan, const ProgressFn& progress = {});

struct InferenceLabels {
  std::string dataset;
  std::string target;
  std::string algorithm;
};

// Greedy inference from `runs` random starts. Starts and sampling seeds are
// derived from (seed, run) so different models can be compared on the same
// starts. Appends one trajectory per run when `trajectories` is given.
std::vector<MetricsRow> evaluate_model(const ParamSet& params, const Universe& u,
                                       const TargetSpec& spec, const EpisodeConfig& cfg,
                                       std::size_t runs, std::uint64_t seed,
                                       const InferenceLabels& labels,
                                       std::vector<Trajectory>* trajectories = nullptr);

// Inference-only evaluation of a trained model on another target or dataset.
// Throws DimensionMismatch when the state sizes differ.
MetricsRow transfer_run(const ParamSet& source, const Universe& dest, const TargetSpec& spec,
                        const EpisodeConfig& cfg, std::size_t runs, std::uint64_t seed,
                        const InferenceLabels& labels);

// Normalized action frequencies over episodes [first, last). Throws EmptyWindow.
std::array<double, kNumActions> action_distribution(const TrainLog& log, std::size_t first,
                                                    std::size_t last);

Trajectory trajectory_of(const Universe& u, const EpisodeResult& episode, const TargetSpec& spec);

// Artifact writers. Every file starts with the effective configuration.
void write_report_csv(const std::vector<MetricsRow>& aggregated, const nlohmann::json& config,
                      std::ostream& out);
void write_runs_csv(const std::vector<MetricsRow>& rows, const nlohmann::json& config,
                    std::ostream& out);
void write_timing_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
void write_curves_jsonl(const std::vector<TrainingCurve>& curves, const nlohmann::json& config,
                        std::ostream& out);
void write_trajectories_jsonl(const std::vector<Trajectory>& trajectories,
                              const nlohmann::json& config, std::ostream& out);
void write_train_log(const TrainLog& log, const nlohmann::json& config, std::ostream& out);

// Writes report.csv, runs.csv, timing.csv, curves.jsonl and trajectories.jsonl
// into `dir`. Throws EmptyResult without rows and Io on write failure.
void emit_report(const PlanResult& result, const std::filesystem::path& dir,
                 const nlohmann::json& config);

// Reads back the per-run rows written by write_runs_csv.
std::vector<MetricsRow> read_runs_csv(std::istream& in);

}  // namespace quizforge
